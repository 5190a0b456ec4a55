//! Keyword-processor strategy: a character trie walked once over the text.
//!
//! Nodes live in a single arena in first-child/next-sibling form, so building
//! the trie is a sort followed by a sequence of pushes with no per-node
//! allocation.

use crate::term::Term;

use super::{CharHit, FoldedText};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Node {
    ch: char,
    first_child: u32,
    next_sibling: u32,
    term: u32,
}

pub(crate) struct TrieEngine {
    nodes: Vec<Node>,
}

/// First eight bytes of `key`, big-endian and zero padded, so integer order
/// agrees with byte order of the strings.
fn prefix_u64(key: &str) -> u64 {
    let mut buf = [0u8; 8];
    let n = key.len().min(8);
    buf[..n].copy_from_slice(&key.as_bytes()[..n]);
    u64::from_be_bytes(buf)
}

impl TrieEngine {
    pub fn build(terms: &[Term], case_sensitive: bool) -> (Self, Vec<u32>) {
        // Inserting keys in sorted order means a node's newest child (the
        // head of its sibling list) is the only one a later key can share,
        // and nodes end up laid out depth-first in the arena.
        // The packed leading bytes settle most comparisons without touching
        // the key strings.
        let mut keys: Vec<(u64, std::borrow::Cow<'_, str>, u32)> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let key = t.match_key(case_sensitive);
                (prefix_u64(&key), key, i as u32)
            })
            .collect();
        keys.sort_unstable();
        let approx: usize = keys.iter().map(|(_, k, _)| k.len()).sum();
        let mut nodes = Vec::with_capacity(approx + 1);
        nodes.push(Node { ch: '\0', first_child: NONE, next_sibling: NONE, term: NONE });
        let mut engine = TrieEngine { nodes };
        let mut distinct = Vec::with_capacity(terms.len());
        for (_, key, idx) in &keys {
            let mut node = 0u32;
            for c in key.chars() {
                node = engine.head_child_or_insert(node, c);
            }
            // Equal keys are adjacent and ordered by index, so the first
            // occurrence claims the node.
            let slot = &mut engine.nodes[node as usize].term;
            if *slot == NONE {
                *slot = *idx;
                distinct.push(*idx);
            }
        }
        distinct.sort_unstable();
        (engine, distinct)
    }

    #[inline]
    fn child(&self, node: u32, c: char) -> Option<u32> {
        let mut cur = self.nodes[node as usize].first_child;
        while cur != NONE {
            let n = &self.nodes[cur as usize];
            if n.ch == c {
                return Some(cur);
            }
            cur = n.next_sibling;
        }
        None
    }

    fn head_child_or_insert(&mut self, node: u32, c: char) -> u32 {
        let head = self.nodes[node as usize].first_child;
        if head != NONE && self.nodes[head as usize].ch == c {
            return head;
        }
        let id = self.nodes.len() as u32;
        self.nodes[node as usize].first_child = id;
        self.nodes.push(Node { ch: c, first_child: NONE, next_sibling: head, term: NONE });
        id
    }

    pub fn find(&self, text: &FoldedText<'_>) -> Vec<CharHit> {
        let chars = &text.chars;
        let n = chars.len();
        let mut hits = Vec::new();
        let mut pos = 0;
        while pos < n {
            // Candidates start only where the preceding character is not a
            // word character, i.e. once per word.
            if !text.left_boundary(pos) {
                pos += 1;
                continue;
            }
            let mut node = 0u32;
            let mut best: Option<(usize, u32)> = None;
            let mut q = pos;
            while q < n {
                match self.child(node, chars[q]) {
                    Some(next) => node = next,
                    None => break,
                }
                q += 1;
                let term = self.nodes[node as usize].term;
                if term != NONE && text.right_boundary(q) {
                    best = Some((q, term));
                }
            }
            match best {
                Some((end, term)) => {
                    hits.push(CharHit { start: pos, end, term });
                    pos = end;
                }
                None => pos += 1,
            }
        }
        hits
    }
}
