//! Stateless derivation of independent random streams from a master seed
//! and a label path.
//!
//! The path is hashed with SHA-256 into a ChaCha20 key, so a stream depends
//! only on `(master_seed, labels)`: never on call order, thread schedule, or
//! platform.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type Stream = ChaCha20Rng;

const DOMAIN: &[u8] = b"sketchbound/stream/v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Index(u64),
    Name(String),
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::Name(s.to_owned())
    }
}

impl From<String> for Label {
    fn from(s: String) -> Self {
        Label::Name(s)
    }
}

impl From<u64> for Label {
    fn from(i: u64) -> Self {
        Label::Index(i)
    }
}

impl From<usize> for Label {
    fn from(i: usize) -> Self {
        Label::Index(i as u64)
    }
}

pub fn derive_stream(master_seed: u64, labels: &[Label]) -> Stream {
    assert!(!labels.is_empty(), "stream label path must be nonempty");
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(master_seed.to_le_bytes());
    for l in labels {
        match l {
            Label::Index(i) => {
                h.update([0u8]);
                h.update(i.to_le_bytes());
            }
            Label::Name(s) => {
                h.update([1u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
        }
    }
    let seed: [u8; 32] = h.finalize().into();
    ChaCha20Rng::from_seed(seed)
}

/// A master seed plus a label prefix; children extend the prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamRoot {
    pub master_seed: u64,
    pub path: Vec<Label>,
}

impl StreamRoot {
    pub fn new(master_seed: u64, label: impl Into<Label>) -> Self {
        Self {
            master_seed,
            path: vec![label.into()],
        }
    }

    pub fn child(&self, label: impl Into<Label>) -> Self {
        let mut path = self.path.clone();
        path.push(label.into());
        Self {
            master_seed: self.master_seed,
            path,
        }
    }

    pub fn stream(&self) -> Stream {
        derive_stream(self.master_seed, &self.path)
    }
}
