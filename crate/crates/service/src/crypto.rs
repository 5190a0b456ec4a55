//! Password hashing and random credentials.

use pbkdf2::pbkdf2_hmac;
use rand::RngCore;
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

pub const SALT_LEN: usize = 16;
pub const HASH_LEN: usize = 32;
pub const DEFAULT_ITERATIONS: u32 = 210_000;
pub const MIN_PASSWORD_CHARS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PasswordRecord {
    pub salt: [u8; SALT_LEN],
    pub iterations: u32,
    pub hash: [u8; HASH_LEN],
}

pub fn derive(password: &str, salt: &[u8], iterations: u32) -> [u8; HASH_LEN] {
    let mut out = [0u8; HASH_LEN];
    pbkdf2_hmac::<Sha256>(password.as_bytes(), salt, iterations, &mut out);
    out
}

impl PasswordRecord {
    pub fn new(password: &str, iterations: u32) -> Self {
        let mut salt = [0u8; SALT_LEN];
        rand::rng().fill_bytes(&mut salt);
        PasswordRecord { salt, iterations, hash: derive(password, &salt, iterations) }
    }

    pub fn verify(&self, password: &str) -> bool {
        derive(password, &self.salt, self.iterations).ct_eq(&self.hash).into()
    }
}

/// Burn the same PBKDF2 work as a real check, for logins naming unknown users.
pub fn dummy_verify(password: &str, iterations: u32) -> bool {
    let salt = [0u8; SALT_LEN];
    let hash = derive(password, &salt, iterations);
    let _ = hash.ct_eq(&[0xa5; HASH_LEN]);
    false
}

/// `n` random bytes, hex-encoded.
pub fn random_hex(n: usize) -> String {
    let mut buf = vec![0u8; n];
    rand::rng().fill_bytes(&mut buf);
    hex::encode(buf)
}

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}
