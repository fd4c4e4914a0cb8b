use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Decision, Recommendation};
use crate::frontend::MethodId;
use crate::injector::GroundTruthEntry;

/// Harmonic mean; zero when both inputs are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Nothing was recommended; precision is reported as 0.
    pub precision_undefined: bool,
}

impl Scores {
    fn from_counts(recommended: f64, correct: f64, moved: f64) -> Self {
        let precision_undefined = recommended == 0.0;
        let precision = if precision_undefined {
            0.0
        } else {
            correct / recommended
        };
        let recall = if moved == 0.0 { 0.0 } else { correct / moved };
        Scores {
            precision,
            recall,
            f1: f1_score(precision, recall),
            precision_undefined,
        }
    }

    fn mean(rows: &[Scores]) -> Self {
        if rows.is_empty() {
            return Scores::from_counts(0.0, 0.0, 0.0);
        }
        let n = rows.len() as f64;
        Scores {
            precision: rows.iter().map(|s| s.precision).sum::<f64>() / n,
            recall: rows.iter().map(|s| s.recall).sum::<f64>() / n,
            f1: rows.iter().map(|s| s.f1).sum::<f64>() / n,
            precision_undefined: rows.iter().all(|s| s.precision_undefined),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRow {
    pub project: String,
    /// Methods that received a recommendation record.
    pub evaluated: usize,
    pub recommended: usize,
    pub correct: usize,
    pub moved: usize,
    pub scores: Scores,
    /// Expected scores of a uniformly random class choice per method.
    pub baseline: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub projects: Vec<ProjectRow>,
    /// Mean of per-project scores over projects with at least one injected move.
    pub macro_avg: Scores,
    /// Scores from counts pooled over all projects.
    pub micro_avg: Scores,
    pub baseline_macro: Scores,
    pub recommended: usize,
    pub correct: usize,
    pub moved: usize,
}

fn is_correct(r: &Recommendation, truth: &HashMap<&MethodId, &GroundTruthEntry>) -> bool {
    r.decision == Decision::Move
        && truth
            .get(&r.method_id)
            .is_some_and(|t| t.original_class_id == r.best_class_id)
}

/// Expected (recommended, correct) counts when each method picks one of its
/// candidate classes uniformly at random and moves unless it picks the origin.
fn baseline_counts(
    recs: &[&Recommendation],
    truth: &HashMap<&MethodId, &GroundTruthEntry>,
) -> (f64, f64) {
    let mut recommended = 0.0;
    let mut correct = 0.0;
    for r in recs {
        let n = r.candidates.len() as f64;
        if n == 0.0 {
            continue;
        }
        let non_origin = r
            .candidates
            .iter()
            .filter(|c| c.class_id != r.origin_class_id)
            .count() as f64;
        recommended += non_origin / n;
        if let Some(t) = truth.get(&r.method_id) {
            if r.candidates
                .iter()
                .any(|c| c.class_id == t.original_class_id)
            {
                correct += 1.0 / n;
            }
        }
    }
    (recommended, correct)
}

/// Precision, recall and F1 per project and averaged.
///
/// A recommendation is correct when it moves a ground-truth method back to
/// its original class. Recall counts every injected move, including ones
/// that got no recommendation record.
pub fn evaluate(recommendations: &[Recommendation], truth: &[GroundTruthEntry]) -> EvalReport {
    let by_method: HashMap<&MethodId, &GroundTruthEntry> =
        truth.iter().map(|t| (&t.moved_method_id, t)).collect();
    let mut projects: BTreeSet<&str> = truth.iter().map(|t| t.moved_method_id.project()).collect();
    projects.extend(recommendations.iter().map(|r| r.method_id.project()));
    let mut recs_by_project: BTreeMap<&str, Vec<&Recommendation>> = BTreeMap::new();
    for r in recommendations {
        recs_by_project
            .entry(r.method_id.project())
            .or_default()
            .push(r);
    }

    let mut rows = Vec::new();
    for p in projects {
        let recs = recs_by_project.get(p).map(Vec::as_slice).unwrap_or(&[]);
        let recommended = recs.iter().filter(|r| r.decision == Decision::Move).count();
        let correct = recs.iter().filter(|r| is_correct(r, &by_method)).count();
        let moved = truth
            .iter()
            .filter(|t| t.moved_method_id.project() == p)
            .count();
        let (b_rec, b_cor) = baseline_counts(recs, &by_method);
        rows.push(ProjectRow {
            project: p.to_string(),
            evaluated: recs.len(),
            recommended,
            correct,
            moved,
            scores: Scores::from_counts(recommended as f64, correct as f64, moved as f64),
            baseline: Scores::from_counts(b_rec, b_cor, moved as f64),
        });
    }
    let with_moves: Vec<&ProjectRow> = rows.iter().filter(|r| r.moved > 0).collect();
    let macro_avg = Scores::mean(&with_moves.iter().map(|r| r.scores).collect::<Vec<_>>());
    let baseline_macro = Scores::mean(&with_moves.iter().map(|r| r.baseline).collect::<Vec<_>>());
    let (recommended, correct, moved) = rows.iter().fold((0, 0, 0), |(a, b, c), r| {
        (a + r.recommended, b + r.correct, c + r.moved)
    });
    EvalReport {
        micro_avg: Scores::from_counts(recommended as f64, correct as f64, moved as f64),
        projects: rows,
        macro_avg,
        baseline_macro,
        recommended,
        correct,
        moved,
    }
}

/// Macro-averaged scores of the uniform random baseline alone.
pub fn random_baseline(recommendations: &[Recommendation], truth: &[GroundTruthEntry]) -> Scores {
    evaluate(recommendations, truth).baseline_macro
}

/// Fixed-width text table of a report.
pub fn summary_table(report: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:>6} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9}",
        "project", "recs", "corr", "moved", "precision", "recall", "F1", "random F1"
    );
    for r in &report.projects {
        let p = if r.scores.precision_undefined {
            "-".to_string()
        } else {
            format!("{:.3}", r.scores.precision)
        };
        let _ = writeln!(
            s,
            "{:<16} {:>6} {:>6} {:>6} {:>9} {:>9.3} {:>9.3} {:>9.3}",
            r.project,
            r.recommended,
            r.correct,
            r.moved,
            p,
            r.scores.recall,
            r.scores.f1,
            r.baseline.f1
        );
    }
    for (label, sc, base) in [
        ("macro", report.macro_avg, Some(report.baseline_macro)),
        ("micro", report.micro_avg, None),
    ] {
        let base = base.map(|b| format!("{:.3}", b.f1)).unwrap_or_default();
        let (recs, corr, moved) = if label == "micro" {
            (
                report.recommended.to_string(),
                report.correct.to_string(),
                report.moved.to_string(),
            )
        } else {
            (String::new(), String::new(), String::new())
        };
        let _ = writeln!(
            s,
            "{:<16} {:>6} {:>6} {:>6} {:>9.3} {:>9.3} {:>9.3} {:>9}",
            label, recs, corr, moved, sc.precision, sc.recall, sc.f1, base
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ClassId;
    use crate::pipeline::ClassScore;

    fn rec(m: &str, best: &str, decision: Decision, n: usize) -> Recommendation {
        let origin = MethodId(m.into()).class_id();
        let mut candidates = vec![ClassScore {
            class_id: origin.clone(),
            probability: 0.1,
        }];
        for i in 1..n {
            candidates.push(ClassScore {
                class_id: ClassId(format!("p/X{i}.java#X{i}")),
                probability: 0.1,
            });
        }
        Recommendation {
            method_id: MethodId(m.into()),
            origin_class_id: origin,
            best_class_id: ClassId(best.into()),
            probability: 0.9,
            decision,
            candidates,
        }
    }

    fn truth(m: &str, orig: &str) -> GroundTruthEntry {
        let id = MethodId(m.into());
        GroundTruthEntry {
            injected_class_id: id.class_id(),
            moved_method_id: id,
            original_class_id: ClassId(orig.into()),
        }
    }

    #[test]
    fn counts_and_f1() {
        let t: Vec<_> = (0..5)
            .map(|i| truth(&format!("p/E.java#E.m{i}/1"), "p/S.java#S"))
            .collect();
        let r = vec![
            rec("p/E.java#E.m0/1", "p/S.java#S", Decision::Move, 2),
            rec("p/E.java#E.m1/1", "p/S.java#S", Decision::Move, 2),
            rec("p/E.java#E.m2/1", "p/Z.java#Z", Decision::Move, 2),
            rec("p/S.java#S.k/1", "p/E.java#E", Decision::Move, 2),
            rec("p/E.java#E.m3/1", "p/E.java#E", Decision::Stay, 2),
        ];
        let rep = evaluate(&r, &t);
        assert_eq!((rep.recommended, rep.correct, rep.moved), (4, 2, 5));
        assert!((rep.micro_avg.precision - 0.5).abs() < 1e-12);
        assert!((rep.micro_avg.recall - 0.4).abs() < 1e-12);
        assert!((rep.micro_avg.f1 - 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn empty_recommendations() {
        let rep = evaluate(&[], &[truth("p/E.java#E.m/1", "p/S.java#S")]);
        assert!(rep.macro_avg.precision_undefined);
        assert_eq!(
            (
                rep.macro_avg.precision,
                rep.macro_avg.recall,
                rep.macro_avg.f1
            ),
            (0.0, 0.0, 0.0)
        );
        let none = evaluate(&[], &[]);
        assert_eq!((none.recommended, none.correct, none.moved), (0, 0, 0));
        assert!(none.projects.is_empty());
    }

    #[test]
    fn baseline_two_candidates() {
        // Each of 4 methods has 2 candidates: 2 expected moves, 0.5 expected correct per truth method.
        let t = vec![
            truth("p/E.java#E.a/1", "p/X1.java#X1"),
            truth("p/E.java#E.b/1", "p/X1.java#X1"),
        ];
        let r: Vec<_> = ["a", "b", "c", "d"]
            .iter()
            .map(|m| {
                rec(
                    &format!("p/E.java#E.{m}/1"),
                    "p/E.java#E",
                    Decision::Stay,
                    2,
                )
            })
            .collect();
        let b = random_baseline(&r, &t);
        assert!((b.precision - 0.5).abs() < 1e-12);
        assert!((b.recall - 0.5).abs() < 1e-12);
    }
}
