use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use simpeval_core::dataset::{load_dataset, Dataset};
use simpeval_core::meta_eval::AgreementReport;

use crate::error::{Result, ServiceError};
use crate::project::{Ack, Event, NextTask, ProjectState, Submission, TaskStatus};
use crate::tutorial::{score_answers, AnnotatorProfile, TutorialAnswers, TUTORIAL_PROJECT};

const EVENTS: &str = "events.jsonl";
const SNAPSHOT: &str = "snapshot.json";
const PROFILES: &str = "annotators.jsonl";

/// On-disk layout:
///
/// ```text
/// {root}/annotators.jsonl                 tutorial results, latest wins
/// {root}/projects/{name}/events.jsonl     append-only event log
/// {root}/projects/{name}/snapshot.json    state rebuilt from the log
/// ```
///
/// All mutations take the write lock, so each project has a single writer.
/// An event is appended to the log before it is applied in memory.
pub struct Store {
    root: PathBuf,
    inner: RwLock<Inner>,
}

struct Inner {
    projects: BTreeMap<String, ProjectState>,
    profiles: BTreeMap<String, AnnotatorProfile>,
}

impl Store {
    /// Opens or initialises a store, replaying every project log.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join("projects"))?;
        let mut projects = BTreeMap::new();
        for entry in fs::read_dir(root.join("projects"))? {
            let dir = entry?.path();
            if dir.join(EVENTS).is_file() {
                let state = replay_log(&dir.join(EVENTS))?;
                fs::write(dir.join(SNAPSHOT), state.snapshot_json())?;
                projects.insert(state.name.clone(), state);
            }
        }
        let mut profiles = BTreeMap::new();
        let path = root.join(PROFILES);
        if path.is_file() {
            for (i, line) in fs::read_to_string(&path)?.lines().enumerate() {
                let p: AnnotatorProfile = serde_json::from_str(line).map_err(|e| corrupt(&path, i, e))?;
                profiles.insert(p.id.clone(), p);
            }
        }
        Ok(Store { root, inner: RwLock::new(Inner { projects, profiles }) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn project_dir(&self, name: &str) -> PathBuf {
        self.root.join("projects").join(name)
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    fn with_project<T>(&self, name: &str, f: impl FnOnce(&ProjectState) -> Result<T>) -> Result<T> {
        let inner = self.read();
        let state = inner.projects.get(name).ok_or_else(|| ServiceError::ProjectNotFound(name.to_string()))?;
        f(state)
    }

    fn commit(&self, inner: &mut Inner, name: &str, event: Event) -> Result<()> {
        let state = inner.projects.get_mut(name).ok_or_else(|| ServiceError::ProjectNotFound(name.to_string()))?;
        let mut next = state.clone();
        next.apply(&event)?;
        let dir = self.project_dir(name);
        append_line(&dir.join(EVENTS), &event)?;
        fs::write(dir.join(SNAPSHOT), next.snapshot_json())?;
        *state = next;
        Ok(())
    }

    pub fn create_project(&self, name: &str, dataset: &Dataset) -> Result<String> {
        let event = ProjectState::creation_event(name, dataset)?;
        let mut inner = self.write();
        let dir = self.project_dir(name);
        if inner.projects.contains_key(name) || dir.exists() {
            return Err(ServiceError::NameConflict(name.to_string()));
        }
        let state = ProjectState::replay([&event])?;
        fs::create_dir_all(&dir)?;
        append_line(&dir.join(EVENTS), &event)?;
        fs::write(dir.join(SNAPSHOT), state.snapshot_json())?;
        inner.projects.insert(name.to_string(), state);
        Ok(name.to_string())
    }

    pub fn create_project_from_path(&self, name: &str, path: impl AsRef<Path>) -> Result<String> {
        self.create_project(name, &load_dataset(path)?)
    }

    pub fn project_names(&self) -> Vec<String> {
        self.read().projects.keys().cloned().collect()
    }

    pub fn profile(&self, annotator: &str) -> Option<AnnotatorProfile> {
        self.read().profiles.get(annotator).cloned()
    }

    fn require_qualified(inner: &Inner, annotator: &str) -> Result<()> {
        match inner.profiles.get(annotator) {
            Some(p) if p.qualified => Ok(()),
            _ => Err(ServiceError::NotQualified(annotator.to_string())),
        }
    }

    pub fn next_task(&self, project: &str, annotator: &str) -> Result<NextTask> {
        Self::require_qualified(&self.read(), annotator)?;
        self.with_project(project, |s| s.next_task(annotator))
    }

    pub fn record_progress(&self, project: &str, annotator: &str, task: usize, status: TaskStatus) -> Result<()> {
        let mut inner = self.write();
        Self::require_qualified(&inner, annotator)?;
        let state = inner.projects.get(project).ok_or_else(|| ServiceError::ProjectNotFound(project.to_string()))?;
        let event = state.progress_event(annotator, task, status)?;
        self.commit(&mut inner, project, event)
    }

    pub fn submit(&self, project: &str, task: usize, submission: Submission) -> Result<Ack> {
        let mut inner = self.write();
        Self::require_qualified(&inner, &submission.annotator)?;
        let state = inner.projects.get(project).ok_or_else(|| ServiceError::ProjectNotFound(project.to_string()))?;
        let (event, ack) = state.submission_event(task, submission)?;
        self.commit(&mut inner, project, event)?;
        Ok(ack)
    }

    /// Scores tutorial answers against the gold of the `tutorial` project
    /// and records the resulting profile, replacing any earlier attempt.
    pub fn score_tutorial(&self, annotator: &str, answers: &TutorialAnswers) -> Result<AnnotatorProfile> {
        let mut inner = self.write();
        let tutorial = inner.projects.get(TUTORIAL_PROJECT).ok_or(ServiceError::NoGold)?;
        let profile = AnnotatorProfile::new(annotator, score_answers(tutorial, answers)?);
        append_line(&self.root.join(PROFILES), &profile)?;
        inner.profiles.insert(annotator.to_string(), profile.clone());
        Ok(profile)
    }

    pub fn agreement(&self, project: &str) -> Result<AgreementReport> {
        self.with_project(project, ProjectState::agreement)
    }

    pub fn export(&self, project: &str) -> Result<Dataset> {
        self.with_project(project, ProjectState::export)
    }

    pub fn state(&self, project: &str) -> Result<ProjectState> {
        self.with_project(project, |s| Ok(s.clone()))
    }

    pub fn snapshot_path(&self, project: &str) -> PathBuf {
        self.project_dir(project).join(SNAPSHOT)
    }

    pub fn log_path(&self, project: &str) -> PathBuf {
        self.project_dir(project).join(EVENTS)
    }
}

/// Rebuilds project state from an event log file.
pub fn replay_log(path: &Path) -> Result<ProjectState> {
    let text = fs::read_to_string(path)?;
    let events = text
        .lines()
        .enumerate()
        .map(|(i, line)| serde_json::from_str::<Event>(line).map_err(|e| corrupt(path, i, e)))
        .collect::<Result<Vec<_>>>()?;
    ProjectState::replay(&events).map_err(|e| match e {
        ServiceError::CorruptLog { detail, .. } => ServiceError::CorruptLog { path: path.display().to_string(), detail },
        other => other,
    })
}

fn corrupt(path: &Path, line: usize, e: impl ToString) -> ServiceError {
    ServiceError::CorruptLog { path: path.display().to_string(), detail: format!("line {}: {}", line + 1, e.to_string()) }
}

fn append_line<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut line = serde_json::to_string(value).expect("event serializes");
    line.push('\n');
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(line.as_bytes())?;
    file.sync_data()?;
    Ok(())
}
