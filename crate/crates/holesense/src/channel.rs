//! Multipath Rayleigh channel synthesis and the structured block-diagonal
//! channel operator.
//!
//! The physical channel from user `i` to receive antenna `j` is a `T`-tap
//! time-domain filter whose taps are independent circularly-symmetric complex
//! Gaussians. On `L` subcarriers it acts as the diagonal of its length-`L`
//! DFT, so the full system operator is an `N_S x N_P` grid of diagonal
//! blocks. [`StructuredChannel`] stores only the `N_S * N_P` frequency
//! responses and applies the operator (and its adjoint) in
//! `O(N_S * N_P * L)`; the dense matrix exists only as a size-capped test
//! oracle.

use crate::signal::BlockVec;
use crate::{Complex, Error};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

/// Power-delay profile of the multipath channel.
///
/// Tap variances must sum to 1 so the per-subcarrier channel gain has unit
/// average energy.
#[derive(Debug, Clone)]
pub struct MultipathProfile {
    tap_variances: Vec<f64>,
}

impl MultipathProfile {
    pub fn new(tap_variances: Vec<f64>) -> Result<Self, Error> {
        if tap_variances.is_empty() {
            return Err(Error::Config("profile needs at least one tap".into()));
        }
        if tap_variances.iter().any(|&v| v < 0.0) {
            return Err(Error::Config("tap variances must be nonnegative".into()));
        }
        let total: f64 = tap_variances.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "tap variances sum to {total}, expected 1"
            )));
        }
        Ok(Self { tap_variances })
    }

    /// `n` taps of equal variance `1/n`.
    pub fn equal_taps(n: usize) -> Self {
        assert!(n >= 1, "tap count must be positive");
        Self {
            tap_variances: vec![1.0 / n as f64; n],
        }
    }

    pub fn n_taps(&self) -> usize {
        self.tap_variances.len()
    }

    pub fn tap_variances(&self) -> &[f64] {
        &self.tap_variances
    }
}

/// Draws one tap realization: tap `t` is `CN(0, var_t)`, independent across
/// taps.
pub fn draw_taps<R: Rng>(profile: &MultipathProfile, rng: &mut R) -> Vec<Complex> {
    profile
        .tap_variances
        .iter()
        .map(|&v| {
            if v == 0.0 {
                Complex::new(0.0, 0.0)
            } else {
                let n = Normal::new(0.0, (v / 2.0).sqrt()).unwrap();
                Complex::new(n.sample(rng), n.sample(rng))
            }
        })
        .collect()
}

/// Per-subcarrier frequency response of a tap vector:
/// `h(k) = sum_t taps[t] * exp(-2*pi*j*k*t/L)` for `k = 0..L-1`
/// (the length-`L` DFT of the zero-padded taps, negative exponent, no `1/L`
/// scaling).
pub fn freq_response(taps: &[Complex], n_subcarriers: usize) -> Result<Vec<Complex>, Error> {
    let t_len = taps.len();
    if t_len > n_subcarriers {
        return Err(Error::Config(format!(
            "{t_len} taps exceed {n_subcarriers} subcarriers"
        )));
    }
    // Twiddle table: exp(-2*pi*j*m/L) for m = 0..L-1.
    let twiddle: Vec<Complex> = (0..n_subcarriers)
        .map(|m| Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * m as f64 / n_subcarriers as f64))
        .collect();
    let mut h = vec![Complex::new(0.0, 0.0); n_subcarriers];
    for (k, hk) in h.iter_mut().enumerate() {
        let mut acc = Complex::new(0.0, 0.0);
        for (t, tap) in taps.iter().enumerate() {
            acc += tap * twiddle[(k * t) % n_subcarriers];
        }
        *hk = acc;
    }
    Ok(h)
}

/// Complex AWGN model. `snr_db = 10*log10(1/sigma_n_sq)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NoiseModel {
    sigma_n_sq: f64,
    snr_db: f64,
}

impl NoiseModel {
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self {
            sigma_n_sq: 10.0f64.powf(-snr_db / 10.0),
            snr_db,
        }
    }

    pub fn from_sigma_sq(sigma_n_sq: f64) -> Result<Self, Error> {
        if sigma_n_sq <= 0.0 {
            return Err(Error::Config("noise variance must be positive".into()));
        }
        Ok(Self {
            sigma_n_sq,
            snr_db: -10.0 * sigma_n_sq.log10(),
        })
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_n_sq
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    /// Draws `len` i.i.d. `CN(0, sigma_n_sq)` samples.
    pub fn draw<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<Complex> {
        draw_cn_vector(len, self.sigma_n_sq, rng)
    }
}

/// `len` i.i.d. circularly-symmetric complex Gaussians of the given variance.
pub fn draw_cn_vector<R: Rng>(len: usize, variance: f64, rng: &mut R) -> Vec<Complex> {
    if variance == 0.0 {
        return vec![Complex::new(0.0, 0.0); len];
    }
    let n = Normal::new(0.0, (variance / 2.0).sqrt()).unwrap();
    (0..len)
        .map(|_| Complex::new(n.sample(rng), n.sample(rng)))
        .collect()
}

/// Size cap for materializing the dense operator (test oracles only).
pub const DENSE_CAP: usize = 1024;

const POWER_ITER_MAX: usize = 2000;
const POWER_ITER_SEED: u64 = 0xC0FF_EE00_5EED;

/// The structured channel operator: an `N_S x N_P` grid of per-subcarrier
/// diagonal responses, logically the `(N_S*L) x (N_P*L)` matrix whose
/// `(j, i)` block is `diag(h[j][i])`.
///
/// Immutable after assembly; safe to share read-only across parallel trials.
#[derive(Debug, Clone)]
pub struct StructuredChannel {
    n_rx: usize,
    n_users: usize,
    n_subcarriers: usize,
    /// Row-major: `responses[j * n_users + i]` is the response from user `i`
    /// to antenna `j`.
    responses: Vec<Vec<Complex>>,
}

impl StructuredChannel {
    pub fn from_responses(
        n_rx: usize,
        n_users: usize,
        n_subcarriers: usize,
        responses: Vec<Vec<Complex>>,
    ) -> Self {
        assert_eq!(responses.len(), n_rx * n_users, "response grid size mismatch");
        for r in &responses {
            assert_eq!(r.len(), n_subcarriers, "response length mismatch");
        }
        Self {
            n_rx,
            n_users,
            n_subcarriers,
            responses,
        }
    }

    /// Draws a fresh channel: independent taps per `(antenna, user)` pair.
    pub fn draw<R: Rng>(
        profile: &MultipathProfile,
        n_rx: usize,
        n_users: usize,
        n_subcarriers: usize,
        rng: &mut R,
    ) -> Result<Self, Error> {
        let mut responses = Vec::with_capacity(n_rx * n_users);
        for _ in 0..n_rx * n_users {
            let taps = draw_taps(profile, rng);
            responses.push(freq_response(&taps, n_subcarriers)?);
        }
        Ok(Self::from_responses(n_rx, n_users, n_subcarriers, responses))
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    /// Output dimension `N_S * L`.
    pub fn output_len(&self) -> usize {
        self.n_rx * self.n_subcarriers
    }

    /// Input dimension `N_P * L`.
    pub fn input_len(&self) -> usize {
        self.n_users * self.n_subcarriers
    }

    pub fn response(&self, rx: usize, user: usize) -> &[Complex] {
        assert!(rx < self.n_rx && user < self.n_users, "response index out of range");
        &self.responses[rx * self.n_users + user]
    }

    /// `y = H x`, segment `j` being `sum_i h[j][i] .* x_i`.
    pub fn apply(&self, x: &BlockVec) -> Vec<Complex> {
        let mut out = vec![Complex::new(0.0, 0.0); self.output_len()];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &BlockVec, out: &mut [Complex]) {
        assert_eq!(x.block_len(), self.n_subcarriers, "block length mismatch");
        assert_eq!(x.n_blocks(), self.n_users, "block count mismatch");
        assert_eq!(out.len(), self.output_len(), "output length mismatch");
        let l = self.n_subcarriers;
        out.fill(Complex::new(0.0, 0.0));
        for j in 0..self.n_rx {
            let seg = &mut out[j * l..(j + 1) * l];
            for i in 0..self.n_users {
                let h = &self.responses[j * self.n_users + i];
                let xi = x.block(i);
                for k in 0..l {
                    seg[k] += h[k] * xi[k];
                }
            }
        }
    }

    /// Adjoint action: block `i` of the result is `sum_j conj(h[j][i]) .* r_j`.
    pub fn apply_adjoint(&self, r: &[Complex]) -> BlockVec {
        let mut out = BlockVec::zeros(self.n_subcarriers, self.n_users);
        self.apply_adjoint_into(r, &mut out);
        out
    }

    pub fn apply_adjoint_into(&self, r: &[Complex], out: &mut BlockVec) {
        assert_eq!(r.len(), self.output_len(), "input length mismatch");
        assert_eq!(out.block_len(), self.n_subcarriers, "block length mismatch");
        assert_eq!(out.n_blocks(), self.n_users, "block count mismatch");
        let l = self.n_subcarriers;
        out.as_mut_slice().fill(Complex::new(0.0, 0.0));
        for i in 0..self.n_users {
            // Work around the borrow: index blocks through raw ranges.
            for j in 0..self.n_rx {
                let h = &self.responses[j * self.n_users + i];
                let rj = &r[j * l..(j + 1) * l];
                let block = &mut out.as_mut_slice()[i * l..(i + 1) * l];
                for k in 0..l {
                    block[k] += h[k].conj() * rj[k];
                }
            }
        }
    }

    /// Dense `N_S x N_P` matrix of responses at subcarrier `k`.
    pub fn subcarrier_matrix(&self, k: usize) -> DMatrix<Complex> {
        assert!(k < self.n_subcarriers, "subcarrier {k} out of range");
        DMatrix::from_fn(self.n_rx, self.n_users, |j, i| {
            self.responses[j * self.n_users + i][k]
        })
    }

    /// Squared operator norm (largest eigenvalue of `H^H H`) estimated by
    /// power iteration on `apply`/`apply_adjoint`, then inflated by
    /// `(1 + tol)` so it never underestimates by more than `tol`.
    pub fn op_norm_sq(&self, tol: f64) -> Result<f64, Error> {
        assert!(tol > 0.0, "tolerance must be positive");
        // Fixed internal seed keeps results reproducible run to run.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(POWER_ITER_SEED);
        let mut v = BlockVec::new(
            draw_cn_vector(self.input_len(), 1.0, &mut rng),
            self.n_subcarriers,
            self.n_users,
        );
        let nv = v.norm();
        if nv == 0.0 {
            return Ok(0.0);
        }
        for z in v.as_mut_slice() {
            *z /= nv;
        }
        let mut hv = vec![Complex::new(0.0, 0.0); self.output_len()];
        let mut w = BlockVec::zeros(self.n_subcarriers, self.n_users);
        let mut lambda = 0.0;
        for _ in 0..POWER_ITER_MAX {
            self.apply_into(&v, &mut hv);
            self.apply_adjoint_into(&hv, &mut w);
            // v is unit, so the Rayleigh quotient is <v, H^H H v> = ||Hv||^2.
            let lambda_new = crate::norm_sqr(&hv);
            let nw = w.norm();
            if nw == 0.0 {
                return Ok(0.0);
            }
            for (vz, wz) in v.as_mut_slice().iter_mut().zip(w.as_slice()) {
                *vz = wz / nw;
            }
            if (lambda_new - lambda).abs() <= tol * lambda_new.max(f64::MIN_POSITIVE) {
                return Ok(lambda_new * (1.0 + tol));
            }
            lambda = lambda_new;
        }
        Err(Error::Numerical(format!(
            "power iteration did not converge in {POWER_ITER_MAX} iterations"
        )))
    }

    /// Materializes the dense operator. Test oracle only: panics when
    /// `N_P * L` exceeds [`DENSE_CAP`].
    pub fn to_dense(&self) -> DMatrix<Complex> {
        assert!(
            self.input_len() <= DENSE_CAP,
            "dense channel capped at N_P*L <= {DENSE_CAP}"
        );
        let l = self.n_subcarriers;
        let mut m = DMatrix::zeros(self.output_len(), self.input_len());
        for j in 0..self.n_rx {
            for i in 0..self.n_users {
                let h = &self.responses[j * self.n_users + i];
                for k in 0..l {
                    m[(j * l + k, i * l + k)] = h[k];
                }
            }
        }
        m
    }

    /// Reproducibility snapshot: one row per stored coefficient with columns
    /// `rx,user,subcarrier,re,im`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "rx,user,subcarrier,re,im")?;
        for j in 0..self.n_rx {
            for i in 0..self.n_users {
                let h = &self.responses[j * self.n_users + i];
                for (k, z) in h.iter().enumerate() {
                    writeln!(w, "{j},{i},{k},{},{}", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use rand_chacha::ChaCha8Rng;

    fn random_channel(n_rx: usize, n_users: usize, l: usize, seed: u64) -> StructuredChannel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = MultipathProfile::equal_taps(l.min(3));
        StructuredChannel::draw(&profile, n_rx, n_users, l, &mut rng).unwrap()
    }

    fn random_blockvec(l: usize, n: usize, seed: u64) -> BlockVec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BlockVec::new(draw_cn_vector(l * n, 1.0, &mut rng), l, n)
    }

    #[test]
    fn profile_rejects_bad_variances() {
        assert!(MultipathProfile::new(vec![0.5, 0.4]).is_err());
        assert!(MultipathProfile::new(vec![1.5, -0.5]).is_err());
        assert!(MultipathProfile::new(vec![]).is_err());
        assert!(MultipathProfile::new(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn equal_taps_variance() {
        let p = MultipathProfile::equal_taps(10);
        assert_eq!(p.n_taps(), 10);
        for &v in p.tap_variances() {
            assert_abs_diff_eq!(v, 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_tap_total_power() {
        let p = MultipathProfile::equal_taps(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mean: f64 = (0..100_000)
            .map(|_| draw_taps(&p, &mut rng)[0].norm_sqr())
            .sum::<f64>()
            / 100_000.0;
        assert_abs_diff_eq!(mean, 1.0, epsilon = 0.02);
    }

    #[test]
    fn ten_tap_total_power() {
        let p = MultipathProfile::equal_taps(10);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mean: f64 = (0..100_000)
            .map(|_| draw_taps(&p, &mut rng).iter().map(|t| t.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / 100_000.0;
        assert_abs_diff_eq!(mean, 1.0, epsilon = 0.02);
    }

    #[test]
    fn flat_channel_from_single_tap() {
        let h = freq_response(&[Complex::new(1.0, 0.0)], 4).unwrap();
        assert_eq!(h, vec![Complex::new(1.0, 0.0); 4]);
    }

    #[test]
    fn unit_delay_is_phase_ramp() {
        let h = freq_response(&[Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)], 4).unwrap();
        let expect = [
            Complex::new(1.0, 0.0),
            Complex::new(0.0, -1.0),
            Complex::new(-1.0, 0.0),
            Complex::new(0.0, 1.0),
        ];
        for (a, b) in h.iter().zip(expect) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn freq_response_rejects_too_many_taps() {
        assert!(freq_response(&[Complex::new(1.0, 0.0); 5], 4).is_err());
    }

    #[test]
    fn per_subcarrier_energy_is_unit() {
        // Parseval-style moment check: E|h(k)|^2 = sum of tap variances = 1.
        let p = MultipathProfile::equal_taps(10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = 72;
        let draws = 2_000; // 2000 draws x 72 subcarriers = 1.44e5 samples
        let mut acc = vec![0.0; l];
        for _ in 0..draws {
            let h = freq_response(&draw_taps(&p, &mut rng), l).unwrap();
            for (a, z) in acc.iter_mut().zip(&h) {
                *a += z.norm_sqr();
            }
        }
        let grand_mean: f64 = acc.iter().sum::<f64>() / (l * draws) as f64;
        assert_abs_diff_eq!(grand_mean, 1.0, epsilon = 0.02);
    }

    #[test]
    fn diagonal_action() {
        let ch = StructuredChannel::from_responses(
            1,
            1,
            2,
            vec![vec![Complex::new(2.0, 0.0), Complex::new(3.0, 0.0)]],
        );
        let x = BlockVec::new(vec![Complex::new(1.0, 0.0); 2], 2, 1);
        assert_eq!(ch.apply(&x), vec![Complex::new(2.0, 0.0), Complex::new(3.0, 0.0)]);
    }

    #[test]
    fn apply_zero_is_zero() {
        let ch = random_channel(2, 3, 4, 10);
        let y = ch.apply(&BlockVec::zeros(4, 3));
        assert_eq!(crate::norm(&y), 0.0);
    }

    #[test]
    fn apply_matches_dense() {
        let ch = random_channel(2, 3, 4, 11);
        let x = random_blockvec(4, 3, 12);
        let y = ch.apply(&x);
        let dense = ch.to_dense();
        let xd = DVector::from_column_slice(x.as_slice());
        let yd = dense * xd;
        for (a, b) in y.iter().zip(yd.iter()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn adjoint_conjugates() {
        let ch =
            StructuredChannel::from_responses(1, 1, 1, vec![vec![Complex::new(0.0, 2.0)]]);
        let r = [Complex::new(1.0, 0.0)];
        let xt = ch.apply_adjoint(&r);
        assert_abs_diff_eq!((xt.as_slice()[0] - Complex::new(0.0, -2.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn adjoint_identity_randomized() {
        // <Hx, r> == <x, H^H r> across 100 random instances.
        for seed in 0..100u64 {
            let n_rx = 1 + (seed % 3) as usize;
            let n_users = 1 + (seed % 4) as usize;
            let l = 2 + (seed % 5) as usize;
            let ch = random_channel(n_rx, n_users, l, 100 + seed);
            let x = random_blockvec(l, n_users, 200 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
            let r = draw_cn_vector(ch.output_len(), 1.0, &mut rng);
            let hx = ch.apply(&x);
            let hr = ch.apply_adjoint(&r);
            let lhs: Complex = hx.iter().zip(&r).map(|(a, b)| a * b.conj()).sum();
            let rhs: Complex = x
                .as_slice()
                .iter()
                .zip(hr.as_slice())
                .map(|(a, b)| a * b.conj())
                .sum();
            let scale = lhs.norm().max(rhs.norm()).max(1e-30);
            assert!(
                (lhs - rhs).norm() / scale < 1e-10,
                "adjoint identity failed at seed {seed}"
            );
        }
    }

    #[test]
    fn apply_touches_only_active_column() {
        // A vector supported on block i must see only column i: zeroing all
        // other columns' responses must not change the output.
        let ch = random_channel(2, 3, 4, 42);
        let mut x = BlockVec::zeros(4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        x.block_mut(1).copy_from_slice(&draw_cn_vector(4, 1.0, &mut rng));
        let masked = {
            let mut responses = Vec::new();
            for j in 0..2 {
                for i in 0..3 {
                    responses.push(if i == 1 {
                        ch.response(j, i).to_vec()
                    } else {
                        vec![Complex::new(0.0, 0.0); 4]
                    });
                }
            }
            StructuredChannel::from_responses(2, 3, 4, responses)
        };
        assert_eq!(ch.apply(&x), masked.apply(&x));
    }

    #[test]
    fn subcarrier_factorization_exact() {
        // Per-subcarrier products reproduce apply exactly.
        let ch = random_channel(3, 2, 5, 77);
        let x = random_blockvec(5, 2, 78);
        let y = ch.apply(&x);
        for k in 0..5 {
            let a = ch.subcarrier_matrix(k);
            let xk = DVector::from_iterator(2, (0..2).map(|i| x.block(i)[k]));
            let yk = a * xk;
            for j in 0..3 {
                assert_eq!(y[j * 5 + k], yk[j], "mismatch at (j={j}, k={k})");
            }
        }
    }

    #[test]
    fn subcarrier_matrix_indexing() {
        let ch = StructuredChannel::from_responses(
            1,
            1,
            2,
            vec![vec![Complex::new(5.0, 0.0), Complex::new(6.0, 0.0)]],
        );
        assert_eq!(ch.subcarrier_matrix(1)[(0, 0)], Complex::new(6.0, 0.0));
        let ramp = StructuredChannel::from_responses(
            2,
            2,
            4,
            vec![
                freq_response(&[Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)], 4).unwrap();
                4
            ],
        );
        let m = ramp.subcarrier_matrix(0);
        for j in 0..2 {
            for i in 0..2 {
                assert_abs_diff_eq!((m[(j, i)] - Complex::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn op_norm_diagonal_case() {
        let ch = StructuredChannel::from_responses(
            1,
            1,
            2,
            vec![vec![Complex::new(2.0, 0.0), Complex::new(3.0, 0.0)]],
        );
        let est = ch.op_norm_sq(1e-6).unwrap();
        assert_abs_diff_eq!(est, 9.0, epsilon = 9.0 * 1e-4);
        let flat = StructuredChannel::from_responses(
            1,
            1,
            2,
            vec![vec![Complex::new(1.0, 0.0); 2]],
        );
        assert_abs_diff_eq!(flat.op_norm_sq(1e-6).unwrap(), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn op_norm_matches_dense_svd() {
        for seed in [5u64, 6, 7] {
            let ch = random_channel(2, 3, 4, seed);
            let est = ch.op_norm_sq(1e-8).unwrap();
            let svd = ch.to_dense().svd(false, false);
            let exact = svd.singular_values[0] * svd.singular_values[0];
            // Estimate must cover the true value and stay within the safety factor.
            assert!(est >= exact * (1.0 - 1e-7), "underestimate at seed {seed}");
            assert!(est <= exact * (1.0 + 1e-3), "overestimate at seed {seed}");
        }
    }

    #[test]
    fn noise_model_consistency() {
        let nm = NoiseModel::from_snr_db(10.0);
        assert_abs_diff_eq!(nm.sigma_sq(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(nm.snr_db(), 10.0, epsilon = 1e-9);
        let nm2 = NoiseModel::from_sigma_sq(0.25).unwrap();
        assert_abs_diff_eq!(nm2.snr_db(), -10.0 * 0.25f64.log10(), epsilon = 1e-9);
        assert!(NoiseModel::from_sigma_sq(0.0).is_err());
    }

    #[test]
    fn channel_csv_dump_shape() {
        let ch = random_channel(2, 2, 3, 9);
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "rx,user,subcarrier,re,im");
        assert_eq!(lines.len(), 1 + 2 * 2 * 3);
    }
}
