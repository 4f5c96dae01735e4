//! Spatial-dimension-hole sensing for multiuser MIMO-OFDM uplinks.
//!
//! A base station with more receive antennas than simultaneously active
//! transmitters leaves spare spatial degrees of freedom ("spatial dimension
//! holes"). A listener with only `N_S` antennas can find those holes by
//! recovering the concatenated per-user transmit vector — which is
//! block-sparse, one length-`L` block per user — from its own received
//! samples, even when `N_S` is smaller than the number of potential users
//! `N_P`. Active users are then decoded with an MMSE equalizer restricted to
//! the detected subset.
//!
//! The crate provides:
//!
//! * [`signal`] — constellations, the extended (zero-augmented) alphabet,
//!   block vectors, and minimum-distance demodulation.
//! * [`channel`] — multipath Rayleigh fading, per-subcarrier frequency
//!   responses, and the structured block-diagonal channel operator with
//!   matrix-free apply/adjoint.
//! * [`solver`] — group-sparse recovery: an accelerated proximal-gradient
//!   solver for the penalized problem, residual-targeted root finding for the
//!   constrained problem, a greedy block matching pursuit, and an exhaustive
//!   support-enumeration oracle for tiny instances.
//! * [`detector`] — the sensing pipeline: reconstruction, zero-thresholding
//!   against the extended alphabet, and majority-rule activity decisions,
//!   plus a full-size MMSE activity baseline.
//! * [`mmse`] — subset MMSE equalization over the detected support and the
//!   three decoder variants (stand-alone sparse, stand-alone MMSE, CS-aided
//!   MMSE).
//! * [`harness`] — deterministic, parallel Monte-Carlo experiments with CSV
//!   and plot outputs, driven by the `holesense` CLI.
//!
//! # Errors and contracts
//!
//! Invalid *data or configuration* (tap variances that do not sum to one, an
//! inconsistent experiment config, I/O failures) is reported through
//! [`Error`]. Violations of documented call contracts (dimension mismatches,
//! out-of-range indices, size caps on test-only oracles) panic.

pub mod channel;
pub mod detector;
pub mod harness;
pub mod mmse;
pub mod selftest;
pub mod signal;
pub mod solver;

/// Complex sample type used throughout the crate.
pub type Complex = num_complex::Complex64;

/// Crate-wide error type for configuration, numerical, and I/O failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration or input data.
    #[error("configuration error: {0}")]
    Config(String),
    /// An iterative numerical procedure failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// File output failed.
    #[error("i/o error writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Squared Euclidean norm of a complex slice.
pub(crate) fn norm_sqr(v: &[Complex]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Euclidean norm of a complex slice.
pub(crate) fn norm(v: &[Complex]) -> f64 {
    norm_sqr(v).sqrt()
}
