use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use simpeval_core::dataset::{Dataset, RatingRecord, SimplificationInstance};
use simpeval_core::edits::{annotate, Category, EditAnnotation};
use simpeval_core::meta_eval::{krippendorff_alpha, zscore_normalize, AgreementReport, RatingTable};
use simpeval_core::textproc::tokenize;

use crate::error::{Offender, Result, ServiceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Pending,
    Step1Done,
    Step2Done,
    Submitted,
}

impl TaskStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskStatus::Pending => "pending",
            TaskStatus::Step1Done => "step1-done",
            TaskStatus::Step2Done => "step2-done",
            TaskStatus::Submitted => "submitted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatedOutput {
    pub output: String,
    pub raw: f64,
    /// 1 is best.
    pub rank: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub annotator: String,
    #[serde(default)]
    pub category_moves: BTreeMap<String, Category>,
    /// Replacement edit lists, keyed by output id.
    #[serde(default)]
    pub edit_corrections: BTreeMap<String, Vec<EditAnnotation>>,
    pub ratings: Vec<RatedOutput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum Event {
    Created {
        name: String,
        /// Instances with proposed category and edits, ratings removed.
        instances: Vec<SimplificationInstance>,
        /// Mean raw rating per output from the source file, if it had any.
        gold: BTreeMap<String, f64>,
    },
    Progress {
        annotator: String,
        task: usize,
        status: TaskStatus,
    },
    Submitted {
        task: usize,
        version: u64,
        submission: Submission,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInfo {
    pub id: usize,
    pub original: String,
    /// Indices into `ProjectState::instances`.
    pub outputs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionRecord {
    pub version: u64,
    pub ratings: Vec<RatedOutput>,
}

/// Everything derivable from a project's event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectState {
    pub name: String,
    pub instances: Vec<SimplificationInstance>,
    pub tasks: Vec<TaskInfo>,
    pub gold: BTreeMap<String, f64>,
    /// annotator → task → status
    pub status: BTreeMap<String, BTreeMap<usize, TaskStatus>>,
    /// annotator → task → latest submission
    pub submissions: BTreeMap<String, BTreeMap<usize, SubmissionRecord>>,
    /// Category moves, last write wins across annotators.
    pub categories: BTreeMap<String, Category>,
    pub edits: BTreeMap<String, Vec<EditAnnotation>>,
    pub events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputCard {
    pub id: String,
    pub text: String,
    pub edits: Vec<EditAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryColumn {
    pub category: Category,
    pub outputs: Vec<OutputCard>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskView {
    pub project: String,
    pub task: usize,
    pub original: String,
    pub status: TaskStatus,
    /// Version of this annotator's latest submission, 0 if none.
    pub version: u64,
    pub groups: Vec<CategoryColumn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextTask {
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub task: usize,
    pub version: u64,
    /// Output pairs ranked in one order but rated in the other, as
    /// `[better-ranked, worse-ranked]`.
    pub non_monotone_pairs: Vec<[String; 2]>,
}

pub fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.len() <= 64 && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl ProjectState {
    /// Creation event for `dataset`: proposed categories and edits are
    /// computed here so replay never re-runs the heuristics.
    pub fn creation_event(name: &str, dataset: &Dataset) -> Result<Event> {
        if !valid_name(name) {
            return Err(ServiceError::InvalidName(name.to_string()));
        }
        if dataset.is_empty() {
            return Err(ServiceError::EmptyProject);
        }
        let mut gold = BTreeMap::new();
        let mut instances = Vec::with_capacity(dataset.len());
        for inst in &dataset.instances {
            if !inst.ratings.is_empty() {
                let mean = inst.ratings.iter().map(|r| r.raw).sum::<f64>() / inst.ratings.len() as f64;
                gold.insert(inst.id.clone(), mean);
            }
            let (category, edits) = annotate(&inst.original, &inst.output)?;
            let mut inst = inst.clone();
            inst.category = Some(category);
            inst.edits = edits;
            inst.ratings.clear();
            instances.push(inst);
        }
        Ok(Event::Created { name: name.to_string(), instances, gold })
    }

    pub fn replay<'a>(events: impl IntoIterator<Item = &'a Event>) -> Result<Self> {
        let mut events = events.into_iter();
        let Some(Event::Created { name, instances, gold }) = events.next() else {
            return Err(ServiceError::CorruptLog { path: String::new(), detail: "log must start with a created event".into() });
        };
        let dataset = Dataset { instances: instances.clone() };
        let tasks = dataset
            .groups()
            .into_iter()
            .enumerate()
            .map(|(i, g)| TaskInfo { id: i + 1, original: g.original, outputs: g.members })
            .collect();
        let mut state = ProjectState {
            name: name.clone(),
            instances: instances.clone(),
            tasks,
            gold: gold.clone(),
            status: BTreeMap::new(),
            submissions: BTreeMap::new(),
            categories: BTreeMap::new(),
            edits: BTreeMap::new(),
            events: 1,
        };
        for event in events {
            state.apply(event)?;
        }
        Ok(state)
    }

    pub fn apply(&mut self, event: &Event) -> Result<()> {
        match event {
            Event::Created { .. } => {
                return Err(ServiceError::CorruptLog { path: String::new(), detail: "second created event".into() });
            }
            Event::Progress { annotator, task, status } => {
                self.status.entry(annotator.clone()).or_default().insert(*task, *status);
            }
            Event::Submitted { task, version, submission } => {
                let annotator = &submission.annotator;
                self.status.entry(annotator.clone()).or_default().insert(*task, TaskStatus::Submitted);
                self.submissions
                    .entry(annotator.clone())
                    .or_default()
                    .insert(*task, SubmissionRecord { version: *version, ratings: submission.ratings.clone() });
                for (id, cat) in &submission.category_moves {
                    self.categories.insert(id.clone(), *cat);
                }
                for (id, edits) in &submission.edit_corrections {
                    self.edits.insert(id.clone(), edits.clone());
                }
            }
        }
        self.events += 1;
        Ok(())
    }

    /// Pretty JSON with a trailing newline; stable because every map is ordered.
    pub fn snapshot_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("state serializes");
        s.push('\n');
        s
    }

    pub fn task(&self, task: usize) -> Result<&TaskInfo> {
        task.checked_sub(1)
            .and_then(|i| self.tasks.get(i))
            .ok_or_else(|| ServiceError::TaskNotFound { project: self.name.clone(), task })
    }

    pub fn status_of(&self, annotator: &str, task: usize) -> TaskStatus {
        self.status.get(annotator).and_then(|m| m.get(&task)).copied().unwrap_or(TaskStatus::Pending)
    }

    fn version_of(&self, annotator: &str, task: usize) -> u64 {
        self.submissions.get(annotator).and_then(|m| m.get(&task)).map_or(0, |r| r.version)
    }

    pub fn category_of(&self, idx: usize) -> Category {
        let inst = &self.instances[idx];
        self.categories.get(&inst.id).copied().or(inst.category).unwrap_or(Category::Paraphrase)
    }

    pub fn edits_of(&self, idx: usize) -> &[EditAnnotation] {
        let inst = &self.instances[idx];
        self.edits.get(&inst.id).unwrap_or(&inst.edits)
    }

    pub fn task_view(&self, annotator: &str, task: usize) -> Result<TaskView> {
        let info = self.task(task)?;
        let groups = Category::ALL
            .into_iter()
            .filter_map(|category| {
                let outputs: Vec<OutputCard> = info
                    .outputs
                    .iter()
                    .filter(|&&i| self.category_of(i) == category)
                    .map(|&i| OutputCard {
                        id: self.instances[i].id.clone(),
                        text: self.instances[i].output.clone(),
                        edits: self.edits_of(i).to_vec(),
                    })
                    .collect();
                (!outputs.is_empty()).then_some(CategoryColumn { category, outputs })
            })
            .collect();
        Ok(TaskView {
            project: self.name.clone(),
            task,
            original: info.original.clone(),
            status: self.status_of(annotator, task),
            version: self.version_of(annotator, task),
            groups,
        })
    }

    /// Lowest-numbered task this annotator has not submitted.
    pub fn next_task(&self, annotator: &str) -> Result<NextTask> {
        match self.tasks.iter().find(|t| self.status_of(annotator, t.id) != TaskStatus::Submitted) {
            Some(t) => Ok(NextTask { done: false, task: Some(self.task_view(annotator, t.id)?) }),
            None => Ok(NextTask { done: true, task: None }),
        }
    }

    pub fn progress_event(&self, annotator: &str, task: usize, status: TaskStatus) -> Result<Event> {
        self.task(task)?;
        let current = self.status_of(annotator, task);
        if status < current || status == TaskStatus::Submitted {
            return Err(ServiceError::StatusRegression { from: current.as_str().into(), to: status.as_str().into() });
        }
        Ok(Event::Progress { annotator: annotator.to_string(), task, status })
    }

    /// Validates a submission and returns the event to log plus its ack.
    pub fn submission_event(&self, task: usize, submission: Submission) -> Result<(Event, Ack)> {
        let info = self.task(task)?;
        let offenders = self.check_submission(info, &submission);
        if !offenders.is_empty() {
            return Err(ServiceError::InvalidSubmission(offenders));
        }
        let version = self.version_of(&submission.annotator, task) + 1;
        let ack = Ack { task, version, non_monotone_pairs: non_monotone_pairs(&submission.ratings) };
        Ok((Event::Submitted { task, version, submission }, ack))
    }

    fn check_submission(&self, info: &TaskInfo, sub: &Submission) -> Vec<Offender> {
        let mut bad = Vec::new();
        let mut flag = |output: &str, field: &str, detail: String| {
            bad.push(Offender { output: output.to_string(), field: field.to_string(), detail })
        };
        if sub.annotator.is_empty() {
            flag("*", "annotator", "missing".into());
        }
        let in_task: BTreeMap<&str, usize> = info.outputs.iter().map(|&i| (self.instances[i].id.as_str(), i)).collect();

        let mut rated = BTreeSet::new();
        for r in &sub.ratings {
            if !in_task.contains_key(r.output.as_str()) {
                flag(&r.output, "output", format!("not part of task {}", info.id));
                continue;
            }
            if !rated.insert(r.output.as_str()) {
                flag(&r.output, "output", "rated more than once".into());
            }
            if !(r.raw.is_finite() && (0.0..=100.0).contains(&r.raw)) {
                flag(&r.output, "raw", format!("{} outside [0, 100]", r.raw));
            }
        }
        for id in in_task.keys() {
            if !rated.contains(id) {
                flag(id, "raw", "missing rating".into());
            }
        }

        let n = sub.ratings.len();
        let mut by_rank: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
        for r in &sub.ratings {
            by_rank.entry(r.rank).or_default().push(&r.output);
        }
        let mut ranks: Vec<u32> = sub.ratings.iter().map(|r| r.rank).collect();
        ranks.sort_unstable();
        if ranks.iter().enumerate().any(|(i, &r)| r as usize != i + 1) {
            for (rank, outputs) in &by_rank {
                if *rank == 0 || *rank as usize > n {
                    for o in outputs {
                        flag(o, "rank", format!("{rank} outside 1..={n}"));
                    }
                } else if outputs.len() > 1 {
                    for o in outputs {
                        flag(o, "rank", format!("rank {rank} shared by {}", outputs.join(", ")));
                    }
                }
            }
            flag("*", "rank", format!("ranks {ranks:?} are not a permutation of 1..={n}"));
        }

        for id in sub.category_moves.keys() {
            if !in_task.contains_key(id.as_str()) {
                flag(id, "category_moves", format!("not part of task {}", info.id));
            }
        }
        for (id, edits) in &sub.edit_corrections {
            let Some(&idx) = in_task.get(id.as_str()) else {
                flag(id, "edit_corrections", format!("not part of task {}", info.id));
                continue;
            };
            let inst = &self.instances[idx];
            let (orig, out) = (tokenize(&inst.original), tokenize(&inst.output));
            for (i, e) in edits.iter().enumerate() {
                if let Err(d) = e.validate(&orig, &out) {
                    flag(id, &format!("edit_corrections[{i}]"), d);
                }
            }
        }
        bad
    }

    pub fn submission_count(&self) -> usize {
        self.submissions.values().map(BTreeMap::len).sum()
    }

    /// Latest raw ratings as a long table.
    pub fn rating_table(&self) -> RatingTable {
        let rows = self
            .submissions
            .iter()
            .flat_map(|(annotator, tasks)| {
                tasks.values().flat_map(move |rec| {
                    rec.ratings.iter().map(move |r| simpeval_core::meta_eval::RatingRow {
                        output: r.output.clone(),
                        annotator: annotator.clone(),
                        value: r.raw,
                        rank: Some(r.rank),
                    })
                })
            })
            .collect();
        RatingTable::new(rows)
    }

    /// Interval α over per-annotator z-scores.
    pub fn agreement(&self) -> Result<AgreementReport> {
        let z = zscore_normalize(&self.rating_table())?;
        Ok(krippendorff_alpha(&z)?)
    }

    /// All instances with final categories, corrected edits and the latest
    /// ratings of every annotator.
    pub fn export(&self) -> Result<Dataset> {
        if self.submission_count() == 0 {
            return Err(ServiceError::EmptyExport);
        }
        let index: BTreeMap<&str, usize> =
            self.instances.iter().enumerate().map(|(i, inst)| (inst.id.as_str(), i)).collect();
        let mut instances: Vec<SimplificationInstance> = (0..self.instances.len())
            .map(|i| SimplificationInstance {
                category: Some(self.category_of(i)),
                edits: self.edits_of(i).to_vec(),
                ..self.instances[i].clone()
            })
            .collect();
        for (annotator, tasks) in &self.submissions {
            for rec in tasks.values() {
                for r in &rec.ratings {
                    instances[index[r.output.as_str()]].ratings.push(RatingRecord {
                        annotator: annotator.clone(),
                        raw: r.raw,
                        rank: r.rank,
                    });
                }
            }
        }
        Ok(Dataset::new(instances)?)
    }
}

/// Pairs where the better-ranked output received the strictly lower rating.
pub fn non_monotone_pairs(ratings: &[RatedOutput]) -> Vec<[String; 2]> {
    let mut sorted: Vec<&RatedOutput> = ratings.iter().collect();
    sorted.sort_by_key(|r| r.rank);
    let mut out = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if a.rank < b.rank && a.raw < b.raw {
                out.push([a.output.clone(), b.output.clone()]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset() -> Dataset {
        Dataset::new(vec![
            SimplificationInstance::new("a1", "The cat sat on the mat today.", "The cat sat on the mat.", &["A cat sat."]),
            SimplificationInstance::new("a2", "The cat sat on the mat today.", "The cat sat. It was on the mat.", &["A cat sat."]),
            SimplificationInstance::new("a3", "The cat sat on the mat today.", "A feline rested on a rug today.", &["A cat sat."]),
            SimplificationInstance::new("b1", "Dogs bark loudly at night.", "Dogs bark.", &["Dogs are loud."]),
        ])
        .unwrap()
    }

    fn state() -> ProjectState {
        let ev = ProjectState::creation_event("p", &dataset()).unwrap();
        ProjectState::replay([&ev]).unwrap()
    }

    fn rating(o: &str, raw: f64, rank: u32) -> RatedOutput {
        RatedOutput { output: o.into(), raw, rank }
    }

    fn valid(annotator: &str) -> Submission {
        Submission {
            annotator: annotator.into(),
            ratings: vec![rating("a1", 70.0, 2), rating("a2", 80.0, 1), rating("a3", 10.0, 3)],
            ..Default::default()
        }
    }

    #[test]
    fn tasks_group_by_original() {
        let s = state();
        assert_eq!(s.tasks.len(), 2);
        assert_eq!(s.tasks[0].outputs, vec![0, 1, 2]);
        let view = s.next_task("x").unwrap().task.unwrap();
        assert_eq!(view.task, 1);
        let cats: Vec<Category> = view.groups.iter().map(|g| g.category).collect();
        assert_eq!(cats, vec![Category::Paraphrase, Category::Split, Category::Deletion]);
    }

    #[test]
    fn validation_names_offenders() {
        let s = state();
        let mut sub = valid("x");
        sub.ratings[0].raw = 101.0;
        sub.ratings[1].rank = 2;
        let Err(ServiceError::InvalidSubmission(off)) = s.submission_event(1, sub) else { panic!() };
        assert!(off.iter().any(|o| o.output == "a1" && o.field == "raw"));
        assert!(off.iter().any(|o| o.output == "a2" && o.field == "rank"));
        assert!(off.iter().any(|o| o.output == "*" && o.detail.contains("[2, 2, 3]")));
    }

    #[test]
    fn incomplete_and_foreign() {
        let s = state();
        let mut sub = valid("x");
        sub.ratings.pop();
        sub.ratings.push(rating("b1", 5.0, 3));
        let Err(ServiceError::InvalidSubmission(off)) = s.submission_event(1, sub) else { panic!() };
        assert!(off.iter().any(|o| o.output == "b1" && o.field == "output"));
        assert!(off.iter().any(|o| o.output == "a3" && o.detail == "missing rating"));
    }

    #[test]
    fn versions_and_warnings() {
        let mut s = state();
        let (ev, ack) = s.submission_event(1, valid("x")).unwrap();
        assert_eq!(ack.version, 1);
        assert!(ack.non_monotone_pairs.is_empty());
        s.apply(&ev).unwrap();
        let mut again = valid("x");
        again.ratings[0].raw = 90.0;
        let (ev, ack) = s.submission_event(1, again).unwrap();
        assert_eq!(ack.version, 2);
        assert_eq!(ack.non_monotone_pairs, vec![["a2".to_string(), "a1".to_string()]]);
        s.apply(&ev).unwrap();
        assert_eq!(s.next_task("x").unwrap().task.unwrap().task, 2);
        assert_eq!(s.export().unwrap().instances[0].ratings.len(), 1);
    }

    #[test]
    fn moves_and_corrections_reach_export() {
        let mut s = state();
        let mut sub = valid("x");
        sub.category_moves.insert("a3".into(), Category::Deletion);
        sub.edit_corrections.insert("a1".into(), vec![]);
        let (ev, _) = s.submission_event(1, sub).unwrap();
        s.apply(&ev).unwrap();
        let d = s.export().unwrap();
        assert_eq!(d.instances[2].category, Some(Category::Deletion));
        assert!(d.instances[0].edits.is_empty());
        assert!(d.instances[3].ratings.is_empty());
    }

    #[test]
    fn progress_is_monotone() {
        let mut s = state();
        let ev = s.progress_event("x", 1, TaskStatus::Step2Done).unwrap();
        s.apply(&ev).unwrap();
        assert!(matches!(s.progress_event("x", 1, TaskStatus::Step1Done), Err(ServiceError::StatusRegression { .. })));
        assert!(s.progress_event("x", 1, TaskStatus::Step2Done).is_ok());
    }

    #[test]
    fn empty_and_bad_names() {
        assert!(matches!(ProjectState::creation_event("p", &Dataset::default()), Err(ServiceError::EmptyProject)));
        assert!(matches!(ProjectState::creation_event("../x", &dataset()), Err(ServiceError::InvalidName(_))));
        assert!(matches!(state().export(), Err(ServiceError::EmptyExport)));
    }
}
