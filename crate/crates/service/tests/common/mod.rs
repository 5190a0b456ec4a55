#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use idpf_service::{router, Service, ServiceConfig};
use reqwest::{Method, StatusCode};
use serde_json::{json, Value};

pub const PASSWORD: &str = "correct horse battery";

pub fn test_config(db: Option<PathBuf>) -> ServiceConfig {
    ServiceConfig { db_path: db, pbkdf2_iterations: 1_000, ..ServiceConfig::default() }
}

pub struct TestServer {
    pub base: String,
    pub svc: Arc<Service>,
    task: tokio::task::JoinHandle<()>,
}

impl TestServer {
    pub async fn start(config: ServiceConfig) -> TestServer {
        let svc = Arc::new(tokio::task::spawn_blocking(move || Service::open(config)).await.unwrap().unwrap());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let app = router(svc.clone());
        let task = tokio::spawn(async move {
            axum::serve(listener, app).await.unwrap();
        });
        TestServer { base, svc, task }
    }

    pub fn client(&self) -> Client {
        Client { base: self.base.clone(), http: reqwest::Client::new() }
    }

    pub async fn stop(self) {
        self.task.abort();
        let _ = self.task.await;
    }
}

#[derive(Clone)]
pub struct Client {
    pub base: String,
    http: reqwest::Client,
}

pub enum Auth<'a> {
    None,
    Bearer(&'a str),
    Key(&'a str),
}

impl Client {
    pub async fn call(&self, method: Method, path: &str, auth: Auth<'_>, body: Option<Value>) -> (StatusCode, Value) {
        let mut req = self.http.request(method, format!("{}{}", self.base, path));
        req = match auth {
            Auth::None => req,
            Auth::Bearer(t) => req.bearer_auth(t),
            Auth::Key(k) => req.header("X-Api-Key", k),
        };
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await.expect("request");
        let status = resp.status();
        let text = resp.text().await.unwrap();
        let value = if text.is_empty() { Value::Null } else { serde_json::from_str(&text).unwrap_or(Value::String(text)) };
        (status, value)
    }

    pub async fn ok(&self, method: Method, path: &str, auth: Auth<'_>, body: Option<Value>) -> Value {
        let (status, v) = self.call(method.clone(), path, auth, body).await;
        assert!(status.is_success(), "{method} {path} -> {status}: {v}");
        v
    }

    /// Register and log in; returns (user_id, token).
    pub async fn user(&self, name: &str) -> (String, String) {
        let body = json!({ "username": name, "password": PASSWORD });
        let id = self.ok(Method::POST, "/users", Auth::None, Some(body.clone())).await["user_id"].as_str().unwrap().to_owned();
        let s = self.ok(Method::POST, "/sessions", Auth::None, Some(body)).await;
        (id, s["token"].as_str().unwrap().to_owned())
    }

    /// Register an app; returns (app_id, api_key).
    pub async fn app(&self, name: &str) -> (String, String) {
        let v = self.ok(Method::POST, "/apps", Auth::None, Some(json!({ "name": name }))).await;
        (v["app_id"].as_str().unwrap().to_owned(), v["api_key"].as_str().unwrap().to_owned())
    }

    pub async fn grant(&self, token: &str, app: &str, filtering: bool, share: bool) {
        let body = json!({ "app_id": app, "allow_filtering": filtering, "allow_others_to_share_me": share });
        self.ok(Method::POST, "/grants", Auth::Bearer(token), Some(body)).await;
    }

    pub async fn add(&self, token: &str, app: &str, kind: &str, term: &str) {
        let body = json!({ "app_id": app, "term": term });
        self.ok(Method::PUT, &format!("/lists/{kind}/terms"), Auth::Bearer(token), Some(body)).await;
    }

    pub async fn filter(&self, key: &str, sender: &str, text: &str, scheme: Value) -> Value {
        let body = json!({ "sender": sender, "text": text, "scheme": scheme });
        self.ok(Method::POST, "/filter", Auth::Key(key), Some(body)).await
    }
}

/// Collects mismatches instead of panicking so the acceptance runner can
/// report them.
#[derive(Default)]
pub struct Deviations(pub Vec<String>);

impl Deviations {
    pub fn check<T: PartialEq + std::fmt::Debug>(&mut self, what: &str, got: T, want: T) {
        if got != want {
            self.0.push(format!("{what}: got {got:?}, want {want:?}"));
        }
    }
}

/// Three users sharing one chat app. Expected values are traced by hand from
/// the list contents below.
pub async fn policy_scenario(c: &Client) -> Deviations {
    let mut d = Deviations::default();
    let (app, key) = c.app("ChatApp").await;
    let (alice, alice_t) = c.user("alice").await;
    let (bob, bob_t) = c.user("bob").await;
    let (jack, jack_t) = c.user("jack").await;
    for t in [&alice_t, &bob_t, &jack_t] {
        c.grant(t, &app, true, true).await;
    }
    let jack_src = format!("SRB:{jack}");

    // Jack blacklists his phone number and his name, but whitelists the name.
    c.add(&jack_t, &app, "SRB", "+36301234567").await;
    c.add(&jack_t, &app, "SRB", "jack").await;
    c.add(&jack_t, &app, "SRW", "jack").await;
    let r = c.filter(&key, &alice, "call jack at +36301234567", json!({})).await;
    d.check("alice->jack text", r["filtered_text"].as_str(), Some("call jack at [FILTERED]"));
    d.check("alice->jack total", r["report"]["total_masked"].as_u64(), Some(1));
    d.check("alice->jack source", r["report"]["by_source"][&jack_src].as_u64(), Some(1));
    d.check("alice->jack span", r["report"]["spans"][0]["start"].as_u64(), Some(13));

    // Alice's own-related blacklist only applies to what Alice sends.
    c.add(&alice_t, &app, "ORB", "Budapest").await;
    let r = c.filter(&key, &alice, "flying to Budapest", json!({})).await;
    d.check("alice ORB text", r["filtered_text"].as_str(), Some("flying to [FILTERED]"));
    d.check("alice ORB source", r["report"]["by_source"]["ORB"].as_u64(), Some(1));
    let r = c.filter(&key, &bob, "flying to Budapest", json!({})).await;
    d.check("bob sends alice ORB term", r["filtered_text"].as_str(), Some("flying to Budapest"));
    d.check("bob total", r["report"]["total_masked"].as_u64(), Some(0));

    // Category terms: masked for Bob; Jack whitelisted the surname himself.
    c.add(&jack_t, &app, "SRW", "smith").await;
    let names = json!({ "categories": ["names"] });
    let r = c.filter(&key, &bob, "ask smith", names.clone()).await;
    d.check("bob names", r["filtered_text"].as_str(), Some("ask [FILTERED]"));
    d.check("bob names source", r["report"]["by_source"]["names"].as_u64(), Some(1));
    let r = c.filter(&key, &jack, "ask smith", names).await;
    d.check("jack SRW keeps names", r["filtered_text"].as_str(), Some("ask smith"));

    // Strict mode: Bob refuses sharing, so his whitelist no longer saves his SRB.
    c.add(&bob_t, &app, "SRB", "bobby").await;
    c.add(&bob_t, &app, "SRW", "bobby").await;
    let r = c.filter(&key, &alice, "hi bobby", json!({})).await;
    d.check("bobby before strict", r["filtered_text"].as_str(), Some("hi bobby"));
    c.grant(&bob_t, &app, true, false).await;
    let r = c.filter(&key, &alice, "hi bobby", json!({})).await;
    d.check("bobby strict", r["filtered_text"].as_str(), Some("hi [FILTERED]"));

    // Reports: Jack sees one count-only notification from Alice's first message.
    let v = c.ok(Method::GET, &format!("/reports?app_id={app}"), Auth::Bearer(&jack_t), None).await;
    let notes = v["notifications"].as_array().cloned().unwrap_or_default();
    d.check("jack notifications", notes.len(), 1);
    d.check("jack notification count", notes.first().and_then(|n| n["count"].as_u64()), Some(1));
    d.check("jack own reports", v["reports"].as_array().map(Vec::len), Some(1));
    let v = c.ok(Method::GET, &format!("/reports?app_id={app}"), Auth::Bearer(&alice_t), None).await;
    d.check("alice reports", v["reports"].as_array().map(Vec::len), Some(4));
    d.check("alice first report total", v["reports"][0]["total_masked"].as_u64(), Some(1));
    let v = c
        .ok(Method::GET, &format!("/reports?app_id={app}&since=2999-01-01T00:00:00Z"), Auth::Bearer(&alice_t), None)
        .await;
    d.check("future since", v, json!({ "reports": [], "notifications": [] }));
    d
}

/// Every byte sequence in `needles` that occurs anywhere in the database file.
pub fn scan_file(path: &Path, needles: &[&str]) -> Vec<String> {
    let bytes = std::fs::read(path).unwrap();
    needles
        .iter()
        .filter(|n| bytes.windows(n.len()).any(|w| w == n.as_bytes()))
        .map(|n| n.to_string())
        .collect()
}
