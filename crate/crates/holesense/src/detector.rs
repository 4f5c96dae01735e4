//! Activity-pattern detection.
//!
//! The sensing pipeline runs in three steps: reconstruct the block-sparse
//! transmit vector, zero every element whose minimum-distance decision over
//! the extended alphabet is the zero symbol, then declare user `i` active
//! when at least half of its block survived. The MMSE baseline feeds the
//! full-size equalizer output through the *same* step-2/step-3 code, so the
//! two detectors differ only in the reconstruction.

use crate::channel::StructuredChannel;
use crate::mmse::mmse_full_estimate;
use crate::signal::{BlockVec, ExtendedAlphabet};
use crate::solver::{
    block_omp, solve_constrained, GroupSparseProblem, SolverChoice, SolverReport, SolverStatus,
    KKT_TOL, MAX_INNER_ITERATIONS,
};
use crate::Complex;

/// Binary per-user activity indicator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivityVector {
    active: Vec<bool>,
}

impl ActivityVector {
    pub fn from_bools(active: Vec<bool>) -> Self {
        Self { active }
    }

    pub fn from_pattern(n_users: usize, pattern: &[usize]) -> Self {
        let mut active = vec![false; n_users];
        for &i in pattern {
            assert!(i < n_users, "user {i} out of range");
            active[i] = true;
        }
        Self { active }
    }

    pub fn all_active(n_users: usize) -> Self {
        Self {
            active: vec![true; n_users],
        }
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn is_active(&self, user: usize) -> bool {
        self.active[user]
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Sparsity pattern: indices of active users, ascending.
    pub fn pattern(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&i| self.active[i]).collect()
    }

    /// `"0110..."` mask, user 0 first. Used in CSV dumps.
    pub fn mask_string(&self) -> String {
        self.active.iter().map(|&a| if a { '1' } else { '0' }).collect()
    }
}

/// How an activity estimate relates to the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeClass {
    Exact,
    /// More users estimated active than the truth.
    FalseAlarm,
    /// Fewer users estimated active than the truth.
    Misdetection,
    /// Same cardinality but a different set.
    Mixed,
}

impl std::fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Exact => write!(f, "exact"),
            Self::FalseAlarm => write!(f, "false_alarm"),
            Self::Misdetection => write!(f, "misdetection"),
            Self::Mixed => write!(f, "mixed"),
        }
    }
}

/// Truth/estimate pair with its classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionOutcome {
    pub truth: ActivityVector,
    pub estimate: ActivityVector,
    pub class: OutcomeClass,
}

/// Classifies an estimate against the truth. Any single wrong user counts as
/// an error; over- and under-estimation are told apart by cardinality.
pub fn classify_outcome(truth: &ActivityVector, estimate: &ActivityVector) -> DetectionOutcome {
    assert_eq!(truth.len(), estimate.len(), "length mismatch");
    let class = if truth == estimate {
        OutcomeClass::Exact
    } else {
        match estimate.n_active().cmp(&truth.n_active()) {
            std::cmp::Ordering::Greater => OutcomeClass::FalseAlarm,
            std::cmp::Ordering::Less => OutcomeClass::Misdetection,
            std::cmp::Ordering::Equal => OutcomeClass::Mixed,
        }
    };
    DetectionOutcome {
        truth: truth.clone(),
        estimate: estimate.clone(),
        class,
    }
}

/// Step 2: zero every element whose extended-alphabet decision is the zero
/// symbol (equivalently, `|v|` is strictly below the distance to every base
/// point); all other elements pass through unchanged.
pub fn zero_threshold(x_tilde: &BlockVec, ext: &ExtendedAlphabet) -> BlockVec {
    let mut out = x_tilde.clone();
    for z in out.as_mut_slice() {
        if ext.is_zeroed(*z) {
            *z = Complex::new(0.0, 0.0);
        }
    }
    out
}

/// Step 3: majority rule per block — user `i` is active iff at least half of
/// its block is nonzero (`2 * nonzeros >= L`, the inclusive boundary).
pub fn activity_from(x_hat: &BlockVec) -> ActivityVector {
    let l = x_hat.block_len();
    let active = (0..x_hat.n_blocks())
        .map(|i| {
            let nonzeros = x_hat
                .block(i)
                .iter()
                .filter(|z| **z != Complex::new(0.0, 0.0))
                .count();
            2 * nonzeros >= l
        })
        .collect();
    ActivityVector::from_bools(active)
}

/// A failed reconstruction; the harness counts the trial as invalid.
#[derive(Debug, Clone, thiserror::Error)]
#[error("solver failed ({status}): residual {residual_norm:.3e} vs epsilon {epsilon:.3e} after {iterations} iterations")]
pub struct SolverFailure {
    pub status: SolverStatus,
    pub residual_norm: f64,
    pub epsilon: f64,
    pub iterations: usize,
}

/// Result of the sparse-reconstruction detector.
#[derive(Debug, Clone)]
pub struct CsDetection {
    pub activity: ActivityVector,
    /// Full solver report; `report.solution` is the raw reconstruction used
    /// by the stand-alone decoder.
    pub report: SolverReport,
}

impl CsDetection {
    pub fn reconstruction(&self) -> &BlockVec {
        &self.report.solution
    }
}

/// Steps 1–3 composite: group-sparse reconstruction (constrained solver or
/// block matching pursuit), zero-thresholding, majority rule.
///
/// A constrained solve that does not land in its residual band is an error;
/// pursuit stopping at its block budget is a defined termination, not a
/// failure.
pub fn detect_cs(
    problem: &GroupSparseProblem<'_>,
    ext: &ExtendedAlphabet,
    choice: SolverChoice,
) -> Result<CsDetection, SolverFailure> {
    let report = match choice {
        SolverChoice::ConstrainedFista => {
            solve_constrained(problem, KKT_TOL, MAX_INNER_ITERATIONS)
        }
        SolverChoice::BlockOmp => block_omp(problem, problem.channel().n_users()),
    };
    let failed = match choice {
        SolverChoice::ConstrainedFista => report.status != SolverStatus::Converged,
        SolverChoice::BlockOmp => report.status == SolverStatus::Infeasible,
    };
    if failed {
        return Err(SolverFailure {
            status: report.status,
            residual_norm: report.residual_norm,
            epsilon: problem.epsilon(),
            iterations: report.iterations,
        });
    }
    let x_hat = zero_threshold(&report.solution, ext);
    let activity = activity_from(&x_hat);
    Ok(CsDetection { activity, report })
}

/// MMSE activity baseline: the full-size regularized equalizer estimate over
/// all users, pushed through the same zero-threshold and majority rule as
/// the sparse detector.
pub fn detect_mmse_baseline(
    channel: &StructuredChannel,
    y: &[Complex],
    sigma_n_sq: f64,
    ext: &ExtendedAlphabet,
) -> ActivityVector {
    let estimate = mmse_full_estimate(channel, y, sigma_n_sq);
    activity_from(&zero_threshold(&estimate, ext))
}
