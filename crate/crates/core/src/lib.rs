//! Text-simplification evaluation: classic metrics, the LENS learnable
//! metric, meta-evaluation statistics, edit analysis, probe systems and the
//! SimpEval dataset format.
//!
//! ```
//! use simpeval_core::metrics::{score_strings, Metric};
//!
//! let s = score_strings(Metric::Sari, "a b c d", "a b", &["a c"]).unwrap();
//! assert_eq!(s, 75.0);
//! ```

pub mod dataset;
pub mod edits;
mod error;
pub mod lens;
pub mod meta_eval;
pub mod metrics;
pub mod probe;
pub mod textproc;

pub use error::{Error, Result};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub mod metrics {}
    #[doc = include_str!("../../../book/src/lens.md")]
    pub mod lens {}
    #[doc = include_str!("../../../book/src/meta-eval.md")]
    pub mod meta_eval {}
    #[doc = include_str!("../../../book/src/edits.md")]
    pub mod edits {}
    #[doc = include_str!("../../../book/src/probes.md")]
    pub mod probes {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    pub mod dataset {}
}
