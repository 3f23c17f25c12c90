use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::project::ProjectState;

/// Project whose source ratings serve as tutorial gold.
pub const TUTORIAL_PROJECT: &str = "tutorial";

/// Annotators qualify with a tutorial score strictly above this.
pub const PASS_MARK: f64 = 85.0;

/// Gold pairs must differ by more than this many raw points.
pub const GOLD_MARGIN: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProfile {
    pub id: String,
    pub score: f64,
    pub qualified: bool,
}

impl AnnotatorProfile {
    pub fn new(id: &str, score: f64) -> Self {
        AnnotatorProfile { id: id.to_string(), score, qualified: score > PASS_MARK }
    }
}

/// Raw ratings the annotator gave to tutorial outputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TutorialAnswers {
    pub answers: BTreeMap<String, f64>,
}

/// Percentage of gold pairs (same original, gold gap above
/// [`GOLD_MARGIN`]) that `answers` order the same way. A missing answer or a
/// tie counts as a miss.
pub fn score_answers(tutorial: &ProjectState, answers: &TutorialAnswers) -> Result<f64> {
    let mut total = 0usize;
    let mut agreed = 0usize;
    for task in &tutorial.tasks {
        let rated: Vec<(&str, f64)> = task
            .outputs
            .iter()
            .filter_map(|&i| {
                let id = tutorial.instances[i].id.as_str();
                tutorial.gold.get(id).map(|&g| (id, g))
            })
            .collect();
        for (i, &(a, ga)) in rated.iter().enumerate() {
            for &(b, gb) in &rated[i + 1..] {
                if (ga - gb).abs() <= GOLD_MARGIN {
                    continue;
                }
                total += 1;
                if let (Some(&xa), Some(&xb)) = (answers.answers.get(a), answers.answers.get(b)) {
                    if xa != xb && (xa - xb).signum() == (ga - gb).signum() {
                        agreed += 1;
                    }
                }
            }
        }
    }
    if total == 0 {
        return Err(ServiceError::NoGold);
    }
    Ok(100.0 * agreed as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use simpeval_core::dataset::{Dataset, SimplificationInstance};

    fn tutorial(pairs: usize) -> ProjectState {
        let mut instances = Vec::new();
        for p in 0..pairs {
            let orig = format!("Original sentence number {p} is here.");
            instances.push(SimplificationInstance::new(&format!("g{p}a"), &orig, "Short one.", &["r"]).with_rating("gold", 80.0, 1));
            instances.push(SimplificationInstance::new(&format!("g{p}b"), &orig, "Short two.", &["r"]).with_rating("gold", 20.0, 2));
        }
        let ev = ProjectState::creation_event(TUTORIAL_PROJECT, &Dataset::new(instances).unwrap()).unwrap();
        ProjectState::replay([&ev]).unwrap()
    }

    fn answers(pairs: usize, correct: usize) -> TutorialAnswers {
        let mut a = TutorialAnswers::default();
        for p in 0..pairs {
            let (x, y) = if p < correct { (90.0, 10.0) } else { (10.0, 90.0) };
            a.answers.insert(format!("g{p}a"), x);
            a.answers.insert(format!("g{p}b"), y);
        }
        a
    }

    #[test]
    fn strict_pass_mark() {
        let t = tutorial(100);
        let s86 = score_answers(&t, &answers(100, 86)).unwrap();
        let s85 = score_answers(&t, &answers(100, 85)).unwrap();
        assert_eq!(s86, 86.0);
        assert_eq!(s85, 85.0);
        assert!(AnnotatorProfile::new("a", s86).qualified);
        assert!(!AnnotatorProfile::new("a", s85).qualified);
        assert!(AnnotatorProfile::new("a", 90.0).qualified);
    }

    #[test]
    fn perfect_and_missing() {
        let t = tutorial(4);
        assert_eq!(score_answers(&t, &answers(4, 4)).unwrap(), 100.0);
        assert_eq!(score_answers(&t, &TutorialAnswers::default()).unwrap(), 0.0);
    }

    #[test]
    fn no_gold() {
        let d = Dataset::new(vec![SimplificationInstance::new("x", "a b", "a", &["a"])]).unwrap();
        let t = ProjectState::replay([&ProjectState::creation_event(TUTORIAL_PROJECT, &d).unwrap()]).unwrap();
        assert!(matches!(score_answers(&t, &TutorialAnswers::default()), Err(ServiceError::NoGold)));
    }
}
