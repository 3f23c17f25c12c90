//! Rank & Rate annotation backend.
//!
//! Annotators pass a tutorial, then pull tasks (one original sentence with
//! all its system outputs, grouped by proposed category and pre-highlighted),
//! and submit category moves, edit corrections, ranks and 0-100 ratings.
//! Every change is an event appended to a per-project log; the in-memory
//! state and `snapshot.json` are a pure fold over that log.

pub mod api;
mod error;
pub mod project;
pub mod store;
pub mod tutorial;

pub use api::{router, serve};
pub use error::{Offender, Result, ServiceError};
pub use project::{Ack, Event, NextTask, ProjectState, RatedOutput, Submission, TaskStatus, TaskView};
pub use store::{replay_log, Store};
pub use tutorial::{AnnotatorProfile, TutorialAnswers, PASS_MARK, TUTORIAL_PROJECT};
