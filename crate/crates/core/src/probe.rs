//! Probe systems: deterministic copy and corruption baselines used to check
//! that a metric prefers real simplifications over conservative or broken
//! outputs.
//!
//! All probes work on whitespace-separated words and rejoin with single
//! spaces.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SimplificationInstance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Copy,
    Drop,
    Scramble,
    Split,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 4] = [ProbeKind::Copy, ProbeKind::Drop, ProbeKind::Scramble, ProbeKind::Split];

    pub fn as_str(self) -> &'static str {
        match self {
            ProbeKind::Copy => "copy",
            ProbeKind::Drop => "drop",
            ProbeKind::Scramble => "scramble",
            ProbeKind::Split => "split",
        }
    }

    pub fn system_id(self) -> String {
        format!("probe-{}", self.as_str())
    }
}

impl std::fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProbeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown probe kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeOutput {
    pub text: String,
    /// The probe could not change the input (scramble of a single word).
    pub degenerate: bool,
}

/// Words removed by the drop probe: 10% rounded half-up, at least one.
pub fn drop_count(n: usize) -> usize {
    ((n + 5) / 10).max(1).min(n)
}

/// Words permuted by the scramble probe: 5% rounded half-up, at least two
/// so that a derangement exists.
pub fn scramble_count(n: usize) -> usize {
    ((n + 10) / 20).max(2).min(n)
}

pub fn generate(kind: ProbeKind, original: &str, seed: u64) -> Result<ProbeOutput> {
    let words: Vec<&str> = original.split_whitespace().collect();
    let n = words.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degenerate = false;
    let out: Vec<&str> = match kind {
        ProbeKind::Copy => words,
        ProbeKind::Drop => {
            let removed = sample(&mut rng, n, drop_count(n));
            let mut keep = vec![true; n];
            for i in removed {
                keep[i] = false;
            }
            words.iter().zip(keep).filter(|(_, k)| *k).map(|(w, _)| *w).collect()
        }
        ProbeKind::Scramble => {
            if n == 1 {
                degenerate = true;
                words
            } else {
                let mut positions = sample(&mut rng, n, scramble_count(n)).into_vec();
                positions.sort_unstable();
                let targets = derangement(&positions, &mut rng);
                let mut out = words.clone();
                for (&from, &to) in positions.iter().zip(&targets) {
                    out[to] = words[from];
                }
                out
            }
        }
        ProbeKind::Split => {
            let at = (n / 2).max(1);
            let mut out = words;
            out.insert(at, ".");
            out
        }
    };
    Ok(ProbeOutput { text: out.join(" "), degenerate })
}

/// Sattolo's algorithm: a uniformly random cyclic permutation of `items`,
/// which moves every element.
fn derangement<R: Rng>(items: &[usize], rng: &mut R) -> Vec<usize> {
    let mut out = items.to_vec();
    for i in (1..out.len()).rev() {
        let j = rng.random_range(0..i);
        out.swap(i, j);
    }
    out
}

/// One probe output per distinct original, carrying the references of the
/// first instance with that original. Each sentence gets seed
/// `seed + position`, so adding sentences does not perturb earlier ones.
pub fn probe_dataset(dataset: &Dataset, kind: ProbeKind, seed: u64) -> Result<Dataset> {
    let system = kind.system_id();
    let mut instances = Vec::new();
    for (i, group) in dataset.groups().into_iter().enumerate() {
        let first = &dataset.instances[group.members[0]];
        let out = generate(kind, &group.original, seed.wrapping_add(i as u64))?;
        instances.push(
            SimplificationInstance::new(&format!("{system}-{i}"), &group.original, &out.text, &first.references)
                .with_system(&system),
        );
    }
    Dataset::new(instances)
}
