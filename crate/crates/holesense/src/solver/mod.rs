//! Group-sparse recovery of the block-structured transmit vector.
//!
//! The recovery problem is: minimize the sum of per-block Euclidean norms
//! subject to a residual bound `||y - Hx|| <= epsilon`. Three routes are
//! provided:
//!
//! * [`solve_constrained`] — the reference route: accelerated proximal
//!   gradient on the penalized form, wrapped in a monotone bisection on the
//!   penalty weight until the residual lands in a band around `epsilon`.
//! * [`block_omp`] — a greedy block matching pursuit with per-subcarrier
//!   least-squares refits.
//! * [`exhaustive_oracle`] — support enumeration with an independent exact
//!   block-coordinate inner solver, capped to tiny instances; the
//!   ground-truth reference for tests and `selftest`.

mod fista;
mod omp;
mod oracle;

pub use fista::{
    solve_constrained, solve_constrained_with, solve_penalized, solve_penalized_with,
    LambdaStep, SolverDiagnostics, KKT_TOL, MAX_INNER_ITERATIONS, RESIDUAL_BAND,
};
pub use omp::block_omp;
pub use oracle::{exhaustive_oracle, penalized_optimum_bcd, ORACLE_MAX_BLOCKS, ORACLE_MAX_BLOCK_LEN};

use crate::channel::StructuredChannel;
use crate::signal::BlockVec;
use crate::Complex;

/// Which reconstruction route the detector runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    /// Constrained group-sparse recovery via accelerated proximal gradient
    /// plus residual-targeted bisection.
    ConstrainedFista,
    /// Greedy block matching pursuit.
    BlockOmp,
}

impl SolverChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fista" | "constrained-fista" => Some(Self::ConstrainedFista),
            "omp" | "block-omp" => Some(Self::BlockOmp),
            _ => None,
        }
    }
}

impl std::fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::ConstrainedFista => write!(f, "constrained-fista"),
            Self::BlockOmp => write!(f, "block-omp"),
        }
    }
}

/// A constrained group-sparse recovery instance.
///
/// Borrows the channel and observation so one channel draw can serve several
/// solver calls within a trial.
#[derive(Debug, Clone, Copy)]
pub struct GroupSparseProblem<'a> {
    channel: &'a StructuredChannel,
    y: &'a [Complex],
    epsilon: f64,
}

impl<'a> GroupSparseProblem<'a> {
    pub fn new(channel: &'a StructuredChannel, y: &'a [Complex], epsilon: f64) -> Self {
        assert!(epsilon >= 0.0, "epsilon must be nonnegative");
        assert_eq!(y.len(), channel.output_len(), "observation length mismatch");
        Self { channel, y, epsilon }
    }

    pub fn channel(&self) -> &'a StructuredChannel {
        self.channel
    }

    pub fn y(&self) -> &'a [Complex] {
        self.y
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Termination state of a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIter,
    Infeasible,
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Converged => write!(f, "converged"),
            Self::MaxIter => write!(f, "max_iter"),
            Self::Infeasible => write!(f, "infeasible"),
        }
    }
}

/// Solution plus exit diagnostics.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub solution: BlockVec,
    /// `||y - H solution||`, recomputed at exit.
    pub residual_norm: f64,
    /// Total inner iterations (summed over bisection steps, when any).
    pub iterations: usize,
    /// Final penalty weight, when the solution came from the penalized path.
    pub lambda_final: Option<f64>,
    pub status: SolverStatus,
    /// Set when a rank-deficient least-squares subproblem was resolved by a
    /// minimum-norm solution.
    pub rank_deficient: bool,
}

impl SolverReport {
    /// Group-norm objective of the reported solution.
    pub fn objective(&self) -> f64 {
        self.solution.group_norm()
    }
}

/// Block-wise soft threshold: each block is scaled by
/// `max(0, 1 - threshold/||block||)`; blocks at or below the threshold are
/// set exactly to zero.
pub fn prox_group(v: &BlockVec, threshold: f64) -> BlockVec {
    let mut out = v.clone();
    prox_group_in_place(&mut out, threshold);
    out
}

pub(crate) fn prox_group_in_place(v: &mut BlockVec, threshold: f64) {
    assert!(threshold >= 0.0, "threshold must be nonnegative");
    if threshold == 0.0 {
        return;
    }
    for i in 0..v.n_blocks() {
        let norm = v.block_norm(i);
        let block = v.block_mut(i);
        if norm <= threshold {
            block.fill(Complex::new(0.0, 0.0));
        } else {
            let scale = 1.0 - threshold / norm;
            for z in block {
                *z *= scale;
            }
        }
    }
}

/// Diagonal of `H_i^H H_i` for user block `i`: entry `k` is
/// `sum_j |h[j][i](k)|^2`.
pub(crate) fn column_gram_diag(channel: &StructuredChannel, i: usize) -> Vec<f64> {
    let l = channel.n_subcarriers();
    let mut d = vec![0.0; l];
    for j in 0..channel.n_rx() {
        let h = channel.response(j, i);
        for k in 0..l {
            d[k] += h[k].norm_sqr();
        }
    }
    d
}

/// Least squares restricted to the given user support, decoupled per
/// subcarrier. Returns the solution (zero off support), its residual norm,
/// and whether any per-subcarrier system was rank deficient (resolved by the
/// minimum-norm solution).
pub(crate) fn support_least_squares(
    channel: &StructuredChannel,
    y: &[Complex],
    support: &[usize],
) -> (BlockVec, f64, bool) {
    let l = channel.n_subcarriers();
    let n_rx = channel.n_rx();
    let mut x = BlockVec::zeros(l, channel.n_users());
    let mut rank_deficient = false;
    if support.is_empty() {
        return (x, crate::norm(y), false);
    }
    let s = support.len();
    for k in 0..l {
        let a = nalgebra::DMatrix::from_fn(n_rx, s, |j, c| channel.response(j, support[c])[k]);
        let yk = nalgebra::DVector::from_fn(n_rx, |j, _| y[j * l + k]);
        let svd = a.svd(true, true);
        let sigma_max = svd.singular_values.max();
        if sigma_max == 0.0 {
            rank_deficient = true;
            continue;
        }
        let eps = sigma_max * 1e-12;
        if svd.rank(eps) < s.min(n_rx) || s > n_rx {
            rank_deficient = true;
        }
        let z = svd.solve(&yk, eps).expect("svd solve");
        for (c, &user) in support.iter().enumerate() {
            x.block_mut(user)[k] = z[c];
        }
    }
    let r = residual_norm(channel, y, &x);
    (x, r, rank_deficient)
}

/// `||y - Hx||`.
pub(crate) fn residual_norm(channel: &StructuredChannel, y: &[Complex], x: &BlockVec) -> f64 {
    let hx = channel.apply(x);
    y.iter()
        .zip(&hx)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
