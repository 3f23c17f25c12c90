//! SimpEval-format datasets: one header line followed by one JSON record per
//! (original, system) pair, with references, edits and ratings embedded.
//!
//! ```text
//! {"format":"simpeval","version":1,"tokenizer":"v1"}
//! {"id":"s1","original":"...","references":["..."],"system":"muss","output":"...","category":null,"edits":[],"ratings":[]}
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::edits::{Category, EditAnnotation};
use crate::error::{Error, Result};
use crate::lens::TrainingExample;
use crate::meta_eval::{aggregate, zscore_normalize, RatingRow, RatingTable};
use crate::textproc::{tokenize, TOKENIZER_VERSION};

pub const FORMAT_NAME: &str = "simpeval";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub annotator: String,
    /// Raw rating on the 0-100 scale.
    pub raw: f64,
    /// 1-based position in the annotator's ranked list for this original.
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplificationInstance {
    pub id: String,
    pub original: String,
    pub references: Vec<String>,
    pub system: String,
    pub output: String,
    pub category: Option<Category>,
    pub edits: Vec<EditAnnotation>,
    pub ratings: Vec<RatingRecord>,
}

impl SimplificationInstance {
    pub fn new<S: AsRef<str>>(id: &str, original: &str, output: &str, references: &[S]) -> Self {
        SimplificationInstance {
            id: id.to_string(),
            original: original.to_string(),
            references: references.iter().map(|r| r.as_ref().to_string()).collect(),
            system: "unknown".to_string(),
            output: output.to_string(),
            category: None,
            edits: Vec::new(),
            ratings: Vec::new(),
        }
    }

    pub fn with_system(mut self, system: &str) -> Self {
        self.system = system.to_string();
        self
    }

    pub fn with_rating(mut self, annotator: &str, raw: f64, rank: u32) -> Self {
        self.ratings.push(RatingRecord { annotator: annotator.to_string(), raw, rank });
        self
    }

    /// Record-level invariants: rating ranges, unique annotators, edit spans.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, r) in self.ratings.iter().enumerate() {
            if !(r.raw.is_finite() && (0.0..=100.0).contains(&r.raw)) {
                return Err(Error::record(&self.id, &format!("ratings[{i}].raw"), format!("{} outside [0, 100]", r.raw)));
            }
            if r.rank == 0 {
                return Err(Error::record(&self.id, &format!("ratings[{i}].rank"), "ranks start at 1"));
            }
            if !seen.insert(r.annotator.as_str()) {
                return Err(Error::record(&self.id, "ratings", format!("annotator {:?} rated twice", r.annotator)));
            }
        }
        if !self.edits.is_empty() {
            let (orig, out) = (tokenize(&self.original), tokenize(&self.output));
            for (i, e) in self.edits.iter().enumerate() {
                e.validate(&orig, &out).map_err(|d| Error::record(&self.id, &format!("edits[{i}]"), d))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u64,
    tokenizer: String,
}

impl Header {
    fn current() -> Self {
        Header { format: FORMAT_NAME.into(), version: FORMAT_VERSION, tokenizer: TOKENIZER_VERSION.into() }
    }
}

/// All outputs sharing one original text.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub original: String,
    /// Indices into [`Dataset::instances`], in file order.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub instances: Vec<SimplificationInstance>,
}

impl Dataset {
    pub fn new(instances: Vec<SimplificationInstance>) -> Result<Self> {
        let dataset = Dataset { instances };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&SimplificationInstance> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// Instances grouped by original text, groups in first-appearance order.
    pub fn groups(&self) -> Vec<Group> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut groups: Vec<Group> = Vec::new();
        for (i, inst) in self.instances.iter().enumerate() {
            let g = *index.entry(inst.original.as_str()).or_insert_with(|| {
                groups.push(Group { original: inst.original.clone(), members: Vec::new() });
                groups.len() - 1
            });
            groups[g].members.push(i);
        }
        groups
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for inst in &self.instances {
            if !ids.insert(inst.id.as_str()) {
                return Err(Error::DuplicateId(inst.id.clone()));
            }
            inst.validate()?;
        }
        // ranks per (annotator, original) form a permutation of 1..N
        for group in self.groups() {
            let mut ranks: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
            for &i in &group.members {
                for r in &self.instances[i].ratings {
                    ranks.entry(r.annotator.as_str()).or_default().push(r.rank);
                }
            }
            for (annotator, mut rs) in ranks {
                rs.sort_unstable();
                if rs.iter().enumerate().any(|(i, &r)| r as usize != i + 1) {
                    let first = &self.instances[group.members[0]].id;
                    return Err(Error::record(
                        first,
                        "ratings.rank",
                        format!("ranks {rs:?} of annotator {annotator:?} are not a permutation of 1..{}", rs.len()),
                    ));
                }
            }
        }
        Ok(())
    }

    /// One row per rating, keyed by instance id.
    pub fn rating_table(&self) -> RatingTable {
        let rows = self
            .instances
            .iter()
            .flat_map(|inst| {
                inst.ratings.iter().map(move |r| RatingRow {
                    output: inst.id.clone(),
                    annotator: r.annotator.clone(),
                    value: r.raw,
                    rank: Some(r.rank),
                })
            })
            .collect();
        RatingTable::new(rows)
    }

    pub fn parse(contents: &str) -> Result<Self> {
        let mut lines = contents.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((header_no, header_line)) = lines.next() else {
            return Ok(Dataset::default());
        };
        let header: Header = serde_json::from_str(header_line).map_err(|e| Error::parse(Some(header_no + 1), e))?;
        if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
            return Err(Error::parse(
                Some(header_no + 1),
                format!("unsupported header {:?} version {}", header.format, header.version),
            ));
        }
        if header.tokenizer != TOKENIZER_VERSION {
            return Err(Error::parse(Some(header_no + 1), format!("spans use tokenizer {:?}", header.tokenizer)));
        }
        let instances = lines
            .map(|(no, line)| serde_json::from_str(line).map_err(|e| Error::parse(Some(no + 1), e)))
            .collect::<Result<Vec<SimplificationInstance>>>()?;
        Dataset::new(instances)
    }

    /// Canonical serialization: fixed key order, one record per line, LF
    /// terminators. An empty dataset serializes to an empty string.
    pub fn to_jsonl(&self) -> String {
        if self.instances.is_empty() {
            return String::new();
        }
        let mut out = serde_json::to_string(&Header::current()).expect("header serializes");
        out.push('\n');
        for inst in &self.instances {
            out.push_str(&serde_json::to_string(inst).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::parse(&std::fs::read_to_string(path)?)
}

pub fn export_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, dataset.to_jsonl())?;
    Ok(())
}

/// Per-annotator z-scored, averaged ratings as training targets.
pub fn to_training_examples(dataset: &Dataset) -> Result<Vec<TrainingExample>> {
    for inst in &dataset.instances {
        if inst.ratings.is_empty() {
            return Err(Error::MissingRatings(inst.id.clone()));
        }
        if inst.references.is_empty() {
            return Err(Error::record(&inst.id, "references", "at least one reference is required"));
        }
    }
    let normalized = zscore_normalize(&dataset.rating_table())?;
    let scores = aggregate(&normalized)?;
    dataset
        .instances
        .iter()
        .map(|inst| {
            let h = *scores.get(&inst.id).ok_or_else(|| Error::MissingRatings(inst.id.clone()))?;
            Ok(TrainingExample { instance: inst.clone(), h })
        })
        .collect()
}
