//! Constellations, symbol sampling, transmit-vector assembly, and
//! minimum-distance demodulation.
//!
//! # Canonical point ordering
//!
//! Every alphabet stores its points in a frozen canonical order:
//! lexicographic by `(re, im)`, both ascending. The extended alphabet appends
//! the zero symbol *after* the base points. Minimum-distance decisions break
//! ties toward the lowest canonical index, so an exact tie between zero and a
//! base point resolves to the base point (the value is kept, not zeroed).
//! CSV dumps and tie-breaks are bit-stable across releases because of this
//! ordering; do not reorder the tables.

use crate::detector::ActivityVector;
use crate::Complex;
use rand::Rng;

/// Constellation label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphabetName {
    Qpsk,
    Qam16,
    Qam64,
}

impl AlphabetName {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Some(Self::Qpsk),
            "16qam" | "qam16" => Some(Self::Qam16),
            "64qam" | "qam64" => Some(Self::Qam64),
            _ => None,
        }
    }
}

impl std::fmt::Display for AlphabetName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Qpsk => write!(f, "qpsk"),
            Self::Qam16 => write!(f, "16qam"),
            Self::Qam64 => write!(f, "64qam"),
        }
    }
}

/// A unit-average-energy IQ constellation.
///
/// All alphabets are scaled so the mean of `|point|^2` is exactly 1, which
/// keeps SNR equal to `1/sigma_n^2` without per-alphabet correction.
#[derive(Debug, Clone)]
pub struct Alphabet {
    points: Vec<Complex>,
    name: AlphabetName,
}

impl Alphabet {
    pub fn new(name: AlphabetName) -> Self {
        let points = match name {
            AlphabetName::Qpsk => square_lattice(&[-1.0, 1.0], 2.0f64.sqrt()),
            AlphabetName::Qam16 => square_lattice(&[-3.0, -1.0, 1.0, 3.0], 10.0f64.sqrt()),
            AlphabetName::Qam64 => square_lattice(
                &[-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0],
                42.0f64.sqrt(),
            ),
        };
        Self { points, name }
    }

    pub fn qpsk() -> Self {
        Self::new(AlphabetName::Qpsk)
    }

    pub fn qam16() -> Self {
        Self::new(AlphabetName::Qam16)
    }

    pub fn qam64() -> Self {
        Self::new(AlphabetName::Qam64)
    }

    pub fn name(&self) -> AlphabetName {
        self.name
    }

    /// Points in canonical `(re, im)`-lexicographic order.
    pub fn points(&self) -> &[Complex] {
        &self.points
    }

    /// Minimum-distance decision over the base constellation.
    pub fn demodulate(&self, value: Complex) -> Complex {
        self.points[nearest_index(value, &self.points)]
    }

    /// Extend with the zero symbol.
    pub fn extend(&self) -> ExtendedAlphabet {
        ExtendedAlphabet::new(self.clone())
    }
}

/// The constellation augmented with a zero point, representing the
/// "no transmission" state.
#[derive(Debug, Clone)]
pub struct ExtendedAlphabet {
    base: Alphabet,
    points: Vec<Complex>,
}

impl ExtendedAlphabet {
    pub fn new(base: Alphabet) -> Self {
        let mut points = base.points.clone();
        points.push(Complex::new(0.0, 0.0));
        Self { base, points }
    }

    pub fn base(&self) -> &Alphabet {
        &self.base
    }

    /// Base points in canonical order, then zero.
    pub fn points(&self) -> &[Complex] {
        &self.points
    }

    fn zero_index(&self) -> usize {
        self.points.len() - 1
    }

    /// Minimum-distance decision over the extended constellation.
    pub fn demodulate(&self, value: Complex) -> Complex {
        self.points[nearest_index(value, &self.points)]
    }

    /// True when the minimum-distance decision over the extended alphabet is
    /// the zero symbol, i.e. `|value|` is strictly smaller than the distance
    /// to every base point.
    pub fn is_zeroed(&self, value: Complex) -> bool {
        nearest_index(value, &self.points) == self.zero_index()
    }
}

/// Index of the closest point; ties go to the lowest index.
fn nearest_index(value: Complex, points: &[Complex]) -> usize {
    assert!(!points.is_empty(), "alphabet must be non-empty");
    let mut best = 0;
    let mut best_d = (value - points[0]).norm_sqr();
    for (i, p) in points.iter().enumerate().skip(1) {
        let d = (value - p).norm_sqr();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn square_lattice(levels: &[f64], scale: f64) -> Vec<Complex> {
    let mut points = Vec::with_capacity(levels.len() * levels.len());
    for &re in levels {
        for &im in levels {
            points.push(Complex::new(re / scale, im / scale));
        }
    }
    points
}

/// A complex vector partitioned into `n_blocks` contiguous user blocks of
/// `block_len` samples each.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVec {
    data: Vec<Complex>,
    block_len: usize,
    n_blocks: usize,
}

impl BlockVec {
    pub fn new(data: Vec<Complex>, block_len: usize, n_blocks: usize) -> Self {
        assert_eq!(
            data.len(),
            block_len * n_blocks,
            "data length must equal block_len * n_blocks"
        );
        Self {
            data,
            block_len,
            n_blocks,
        }
    }

    pub fn zeros(block_len: usize, n_blocks: usize) -> Self {
        Self::new(
            vec![Complex::new(0.0, 0.0); block_len * n_blocks],
            block_len,
            n_blocks,
        )
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex] {
        &mut self.data
    }

    pub fn block(&self, i: usize) -> &[Complex] {
        assert!(i < self.n_blocks, "block index {i} out of range");
        &self.data[i * self.block_len..(i + 1) * self.block_len]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [Complex] {
        assert!(i < self.n_blocks, "block index {i} out of range");
        &mut self.data[i * self.block_len..(i + 1) * self.block_len]
    }

    pub fn block_norm(&self, i: usize) -> f64 {
        crate::norm(self.block(i))
    }

    /// Sum of per-block Euclidean norms (the group-sparsity objective).
    pub fn group_norm(&self) -> f64 {
        (0..self.n_blocks).map(|i| self.block_norm(i)).sum()
    }

    pub fn norm(&self) -> f64 {
        crate::norm(&self.data)
    }
}

/// Draws `count` symbols i.i.d. uniformly from the alphabet.
pub fn sample_symbols<R: Rng>(alphabet: &Alphabet, count: usize, rng: &mut R) -> Vec<Complex> {
    assert!(count >= 1, "count must be positive");
    let points = alphabet.points();
    (0..count)
        .map(|_| points[rng.random_range(0..points.len())])
        .collect()
}

/// Assembles the concatenated transmit vector: block `i` carries the `i`-th
/// active user's symbols, inactive blocks are exactly zero.
///
/// `symbols` holds one length-`block_len` vector per *active* user, in
/// ascending user order.
pub fn assemble_transmit(
    activity: &ActivityVector,
    symbols: &[Vec<Complex>],
    block_len: usize,
) -> Result<BlockVec, crate::Error> {
    let pattern = activity.pattern();
    if pattern.len() != symbols.len() {
        return Err(crate::Error::Config(format!(
            "{} active users but {} symbol vectors supplied",
            pattern.len(),
            symbols.len()
        )));
    }
    let mut x = BlockVec::zeros(block_len, activity.len());
    for (&user, syms) in pattern.iter().zip(symbols) {
        if syms.len() != block_len {
            return Err(crate::Error::Config(format!(
                "user {user}: expected {block_len} symbols, got {}",
                syms.len()
            )));
        }
        x.block_mut(user).copy_from_slice(syms);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn alphabets_have_unit_average_energy_and_distinct_points() {
        for name in [AlphabetName::Qpsk, AlphabetName::Qam16, AlphabetName::Qam64] {
            let a = Alphabet::new(name);
            let n = a.points().len();
            assert!(n == 4 || n == 16 || n == 64);
            let mean_power: f64 =
                a.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / n as f64;
            assert_abs_diff_eq!(mean_power, 1.0, epsilon = 1e-12);
            for i in 0..n {
                for j in i + 1..n {
                    assert_ne!(a.points()[i], a.points()[j]);
                }
            }
        }
    }

    #[test]
    fn canonical_order_is_re_im_lexicographic() {
        for a in [Alphabet::qpsk(), Alphabet::qam16(), Alphabet::qam64()] {
            let pts = a.points();
            for w in pts.windows(2) {
                assert!(
                    (w[0].re, w[0].im) < (w[1].re, w[1].im),
                    "points out of canonical order in {:?}",
                    a.name()
                );
            }
        }
    }

    #[test]
    fn extended_alphabet_is_base_plus_zero() {
        let ext = Alphabet::qpsk().extend();
        assert_eq!(ext.points().len(), 5);
        assert_eq!(&ext.points()[..4], Alphabet::qpsk().points());
        assert_eq!(ext.points()[4], Complex::new(0.0, 0.0));
    }

    #[test]
    fn qpsk_sampling_stays_on_lattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let syms = sample_symbols(&Alphabet::qpsk(), 4, &mut rng);
        for s in syms {
            assert_abs_diff_eq!(s.re.abs(), FRAC_1_SQRT_2, epsilon = 1e-15);
            assert_abs_diff_eq!(s.im.abs(), FRAC_1_SQRT_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn sampled_power_converges_to_one() {
        // Law-of-large-numbers check at 1e5 draws.
        for a in [Alphabet::qpsk(), Alphabet::qam16()] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let syms = sample_symbols(&a, 100_000, &mut rng);
            let mean_power = crate::norm_sqr(&syms) / syms.len() as f64;
            assert_abs_diff_eq!(mean_power, 1.0, epsilon = 0.01);
        }
    }

    #[test]
    fn qam16_point_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_symbols(&Alphabet::qam16(), 1, &mut rng)[0];
        let scale = 1.0 / 10.0f64.sqrt();
        let levels = [-3.0, -1.0, 1.0, 3.0];
        assert!(levels.iter().any(|&l| (s.re - l * scale).abs() < 1e-15));
        assert!(levels.iter().any(|&l| (s.im - l * scale).abs() < 1e-15));
    }

    #[test]
    fn md_demodulation_picks_nearest_quadrant() {
        let a = Alphabet::qpsk();
        let v = Complex::new(0.9 * FRAC_1_SQRT_2, 0.8 * FRAC_1_SQRT_2);
        assert_eq!(a.demodulate(v), Complex::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2));
    }

    #[test]
    fn extended_md_zeroes_small_values() {
        // |v| = 0.141 while the nearest QPSK point is 0.859 away.
        let ext = Alphabet::qpsk().extend();
        let v = Complex::new(0.1, 0.1);
        let d_zero = v.norm();
        let d_base = (v - Complex::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).norm();
        assert!(d_zero < d_base);
        assert_eq!(ext.demodulate(v), Complex::new(0.0, 0.0));
        assert!(ext.is_zeroed(v));
    }

    #[test]
    fn md_tie_breaks_toward_base_point() {
        // Exact midpoint between 0 and (1+j)/sqrt(2): both distances are the
        // same floating-point value, and the base point has the lower
        // canonical index, so it wins and the value is kept.
        let ext = Alphabet::qpsk().extend();
        let p = Complex::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let mid = p / 2.0;
        assert_eq!((mid - p).norm_sqr(), mid.norm_sqr());
        assert_eq!(ext.demodulate(mid), p);
        assert!(!ext.is_zeroed(mid));
    }

    #[test]
    fn md_round_trips_every_point() {
        for a in [Alphabet::qpsk(), Alphabet::qam16(), Alphabet::qam64()] {
            let ext = a.extend();
            for &p in a.points() {
                assert_eq!(a.demodulate(p), p);
                assert_eq!(ext.demodulate(p), p);
            }
            assert_eq!(
                ext.demodulate(Complex::new(0.0, 0.0)),
                Complex::new(0.0, 0.0)
            );
        }
    }

    #[test]
    fn assemble_places_blocks_and_zeros() {
        let a = ActivityVector::from_pattern(2, &[0]);
        let c = Complex::new(0.5, -0.5);
        let x = assemble_transmit(&a, &[vec![c; 4]], 4).unwrap();
        assert_eq!(x.block(0), &[c; 4][..]);
        assert_eq!(x.block(1), &[Complex::new(0.0, 0.0); 4][..]);
        assert_eq!(x.block_norm(1), 0.0);
    }

    #[test]
    fn assemble_empty_support_is_zero() {
        let a = ActivityVector::from_pattern(8, &[]);
        let x = assemble_transmit(&a, &[], 72).unwrap();
        assert_eq!(x.len(), 576);
        assert_eq!(x.norm(), 0.0);
    }

    #[test]
    fn assemble_full_load_power() {
        let a = ActivityVector::from_pattern(8, &(0..8).collect::<Vec<_>>());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alph = Alphabet::qpsk();
        let symbols: Vec<Vec<Complex>> =
            (0..8).map(|_| sample_symbols(&alph, 72, &mut rng)).collect();
        let x = assemble_transmit(&a, &symbols, 72).unwrap();
        for i in 0..8 {
            assert!(x.block_norm(i) > 0.0);
        }
        // QPSK symbols have |s|^2 = 1 exactly, so the total power is N_P * L.
        assert_abs_diff_eq!(crate::norm_sqr(x.as_slice()), 576.0, epsilon = 1e-9);
    }

    #[test]
    fn assemble_rejects_count_mismatch() {
        let a = ActivityVector::from_pattern(2, &[0, 1]);
        let err = assemble_transmit(&a, &[vec![Complex::new(1.0, 0.0); 4]], 4);
        assert!(err.is_err());
    }
}
