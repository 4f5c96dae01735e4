//! Subset MMSE equalization and the three decoder variants.
//!
//! Because the channel is diagonal per subcarrier, the big regularized
//! normal-equation solve decouples into `L` independent Hermitian
//! positive-definite systems of size `|S| x |S|` — an algebraic identity,
//! not an approximation. Each system is factorized once per trial.

use crate::channel::StructuredChannel;
use crate::detector::ActivityVector;
use crate::signal::{Alphabet, BlockVec, ExtendedAlphabet};
use crate::Complex;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Per-subcarrier factorized MMSE systems for one active-user pattern.
pub struct SubsetEqualizer {
    pattern: Vec<usize>,
    /// One `(A_k, chol(A_k^H A_k + sigma^2 I))` pair per subcarrier.
    systems: Vec<(DMatrix<Complex>, Cholesky<Complex, Dyn>)>,
    n_subcarriers: usize,
}

impl SubsetEqualizer {
    /// Builds the equalizer for the given active set. `sigma_n_sq > 0`
    /// guarantees every per-subcarrier system is Hermitian positive
    /// definite.
    pub fn new(channel: &StructuredChannel, pattern: &[usize], sigma_n_sq: f64) -> Self {
        assert!(!pattern.is_empty(), "subset equalizer needs a non-empty active set");
        assert!(sigma_n_sq > 0.0, "noise variance must be positive");
        let l = channel.n_subcarriers();
        let s = pattern.len();
        let mut systems = Vec::with_capacity(l);
        for k in 0..l {
            let a = DMatrix::from_fn(channel.n_rx(), s, |j, c| channel.response(j, pattern[c])[k]);
            let mut gram = a.adjoint() * &a;
            for i in 0..s {
                gram[(i, i)] += Complex::new(sigma_n_sq, 0.0);
            }
            let chol = Cholesky::new(gram)
                .expect("regularized Gram matrix is Hermitian positive definite");
            systems.push((a, chol));
        }
        Self {
            pattern: pattern.to_vec(),
            systems,
            n_subcarriers: l,
        }
    }

    pub fn pattern(&self) -> &[usize] {
        &self.pattern
    }

    /// Equalizes the observation: returns one length-`L` estimate per active
    /// user, in pattern order.
    pub fn solve(&self, y: &[Complex]) -> Vec<Vec<Complex>> {
        let l = self.n_subcarriers;
        let s = self.pattern.len();
        let n_rx = self.systems[0].0.nrows();
        assert_eq!(y.len(), n_rx * l, "observation length mismatch");
        let mut estimates = vec![vec![Complex::new(0.0, 0.0); l]; s];
        for (k, (a, chol)) in self.systems.iter().enumerate() {
            let yk = DVector::from_fn(n_rx, |j, _| y[j * l + k]);
            let rhs = a.adjoint() * yk;
            let z = chol.solve(&rhs);
            for c in 0..s {
                estimates[c][k] = z[c];
            }
        }
        estimates
    }
}

/// The subset MMSE estimate `(H_s^H H_s + sigma^2 I)^-1 H_s^H y`, computed
/// per subcarrier. Returns one length-`L` vector per active user, in pattern
/// order.
pub fn mmse_subset(
    channel: &StructuredChannel,
    pattern: &[usize],
    y: &[Complex],
    sigma_n_sq: f64,
) -> Vec<Vec<Complex>> {
    SubsetEqualizer::new(channel, pattern, sigma_n_sq).solve(y)
}

/// Full-size MMSE estimate over all `N_P` users, as a block vector.
///
/// With `sigma_n_sq = 0` the regularization vanishes; the per-subcarrier
/// systems are then solved as minimum-norm least squares (pseudo-inverse),
/// which covers the underdetermined `N_S < N_P` case.
pub fn mmse_full_estimate(
    channel: &StructuredChannel,
    y: &[Complex],
    sigma_n_sq: f64,
) -> BlockVec {
    assert!(sigma_n_sq >= 0.0, "noise variance must be nonnegative");
    let l = channel.n_subcarriers();
    let n = channel.n_users();
    assert_eq!(y.len(), channel.output_len(), "observation length mismatch");
    let mut out = BlockVec::zeros(l, n);
    if sigma_n_sq > 0.0 {
        let all: Vec<usize> = (0..n).collect();
        let eq = SubsetEqualizer::new(channel, &all, sigma_n_sq);
        let est = eq.solve(y);
        for (i, user_est) in est.iter().enumerate() {
            out.block_mut(i).copy_from_slice(user_est);
        }
    } else {
        for k in 0..l {
            let a = DMatrix::from_fn(channel.n_rx(), n, |j, i| channel.response(j, i)[k]);
            let yk = DVector::from_fn(channel.n_rx(), |j, _| y[j * l + k]);
            let svd = a.svd(true, true);
            let sigma_max = svd.singular_values.max();
            let eps = if sigma_max > 0.0 { sigma_max * 1e-12 } else { 1.0 };
            let z = svd.solve(&yk, eps).expect("svd solve");
            for i in 0..n {
                out.block_mut(i)[k] = z[i];
            }
        }
    }
    out
}

/// Per-user symbol decisions. `None` means the decoder produced no estimate
/// for that user (it was not detected active).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolDecisions {
    per_user: Vec<Option<Vec<Complex>>>,
}

impl SymbolDecisions {
    pub fn none(n_users: usize) -> Self {
        Self {
            per_user: vec![None; n_users],
        }
    }

    pub fn n_users(&self) -> usize {
        self.per_user.len()
    }

    pub fn decided(&self, user: usize) -> Option<&[Complex]> {
        self.per_user[user].as_deref()
    }

    fn set(&mut self, user: usize, decisions: Vec<Complex>) {
        self.per_user[user] = Some(decisions);
    }
}

/// Stand-alone sparse decoder: minimum-distance demodulation of the raw
/// reconstruction's detected-active blocks over the base alphabet.
pub fn decode_cs_standalone(
    x_tilde: &BlockVec,
    detected: &ActivityVector,
    alphabet: &Alphabet,
) -> SymbolDecisions {
    assert_eq!(x_tilde.n_blocks(), detected.len(), "user count mismatch");
    let mut out = SymbolDecisions::none(detected.len());
    for user in detected.pattern() {
        let decisions = x_tilde
            .block(user)
            .iter()
            .map(|&z| alphabet.demodulate(z))
            .collect();
        out.set(user, decisions);
    }
    out
}

/// Stand-alone MMSE decoder: the full-size estimate demodulated over the
/// *extended* alphabet for every user, so "no transmission" is expressible.
pub fn decode_mmse_standalone(
    channel: &StructuredChannel,
    y: &[Complex],
    sigma_n_sq: f64,
    ext: &ExtendedAlphabet,
) -> SymbolDecisions {
    let estimate = mmse_full_estimate(channel, y, sigma_n_sq);
    let mut out = SymbolDecisions::none(channel.n_users());
    for user in 0..channel.n_users() {
        let decisions = estimate
            .block(user)
            .iter()
            .map(|&z| ext.demodulate(z))
            .collect();
        out.set(user, decisions);
    }
    out
}

/// CS-aided MMSE decoder: subset MMSE on the detected pattern, then
/// minimum-distance demodulation over the base alphabet. An empty detected
/// set yields an empty decision set.
pub fn decode_cs_mmse(
    channel: &StructuredChannel,
    y: &[Complex],
    sigma_n_sq: f64,
    detected: &ActivityVector,
    alphabet: &Alphabet,
) -> SymbolDecisions {
    let pattern = detected.pattern();
    let mut out = SymbolDecisions::none(detected.len());
    if pattern.is_empty() {
        return out;
    }
    let estimates = mmse_subset(channel, &pattern, y, sigma_n_sq);
    for (user, est) in pattern.into_iter().zip(estimates) {
        out.set(user, est.iter().map(|&z| alphabet.demodulate(z)).collect());
    }
    out
}

/// Symbol-error accounting over the truly transmitted symbols only.
///
/// A truly active user with no decision contributes a full block of errors;
/// decisions for users that transmitted nothing are ignored. Returns
/// `(errors, total_symbols)` with `total_symbols = L * |truth|`.
pub fn count_symbol_errors(
    truth: &ActivityVector,
    transmitted: &BlockVec,
    decisions: &SymbolDecisions,
) -> (u64, u64) {
    assert_eq!(truth.len(), transmitted.n_blocks(), "user count mismatch");
    assert_eq!(truth.len(), decisions.n_users(), "user count mismatch");
    let l = transmitted.block_len() as u64;
    let mut errors = 0u64;
    let mut total = 0u64;
    for user in truth.pattern() {
        total += l;
        match decisions.decided(user) {
            None => errors += l,
            Some(d) => {
                errors += d
                    .iter()
                    .zip(transmitted.block(user))
                    .filter(|(a, b)| a != b)
                    .count() as u64;
            }
        }
    }
    (errors, total)
}
