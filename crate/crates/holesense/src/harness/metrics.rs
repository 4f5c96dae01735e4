//! Aggregated error statistics per SNR point.

use super::TrialRecord;
use crate::detector::OutcomeClass;

/// Activity detector selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    Cs,
    Mmse,
}

/// Decoder selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoder {
    CsStandalone,
    MmseStandalone,
    CsMmse,
}

/// Outcome counts of one detector at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectorCounts {
    pub exact: u64,
    pub false_alarm: u64,
    pub misdetection: u64,
    pub mixed: u64,
}

impl DetectorCounts {
    fn record(&mut self, class: OutcomeClass) {
        match class {
            OutcomeClass::Exact => self.exact += 1,
            OutcomeClass::FalseAlarm => self.false_alarm += 1,
            OutcomeClass::Misdetection => self.misdetection += 1,
            OutcomeClass::Mixed => self.mixed += 1,
        }
    }

    pub fn errors(&self) -> u64 {
        self.false_alarm + self.misdetection + self.mixed
    }
}

/// Error statistics at one SNR point. All probabilities use valid trials as
/// the denominator; SERs use the total count of truly transmitted symbols in
/// valid trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrMetrics {
    pub snr_db: f64,
    pub n_trials: u64,
    pub n_valid: u64,
    pub n_invalid: u64,
    pub cs: DetectorCounts,
    pub mmse: DetectorCounts,
    pub errors_cs: u64,
    pub errors_mmse: u64,
    pub errors_cs_mmse: u64,
    pub symbols_total: u64,
}

impl SnrMetrics {
    fn new(snr_db: f64) -> Self {
        Self {
            snr_db,
            n_trials: 0,
            n_valid: 0,
            n_invalid: 0,
            cs: DetectorCounts::default(),
            mmse: DetectorCounts::default(),
            errors_cs: 0,
            errors_mmse: 0,
            errors_cs_mmse: 0,
            symbols_total: 0,
        }
    }

    fn counts(&self, detector: Detector) -> &DetectorCounts {
        match detector {
            Detector::Cs => &self.cs,
            Detector::Mmse => &self.mmse,
        }
    }

    fn ratio(numerator: u64, denominator: u64) -> Option<f64> {
        (denominator > 0).then(|| numerator as f64 / denominator as f64)
    }

    /// Probability that the detector got at least one user wrong.
    pub fn p_activity_error(&self, detector: Detector) -> Option<f64> {
        Self::ratio(self.counts(detector).errors(), self.n_valid)
    }

    pub fn p_class(&self, detector: Detector, class: OutcomeClass) -> Option<f64> {
        let c = self.counts(detector);
        let n = match class {
            OutcomeClass::Exact => c.exact,
            OutcomeClass::FalseAlarm => c.false_alarm,
            OutcomeClass::Misdetection => c.misdetection,
            OutcomeClass::Mixed => c.mixed,
        };
        Self::ratio(n, self.n_valid)
    }

    pub fn ser(&self, decoder: Decoder) -> Option<f64> {
        let errors = match decoder {
            Decoder::CsStandalone => self.errors_cs,
            Decoder::MmseStandalone => self.errors_mmse,
            Decoder::CsMmse => self.errors_cs_mmse,
        };
        Self::ratio(errors, self.symbols_total)
    }

    /// Normal-approximation 95% half-width for a proportion estimated from
    /// `n` observations.
    pub fn ci_halfwidth(p: f64, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        1.96 * (p * (1.0 - p) / n as f64).sqrt()
    }

    pub fn activity_error_ci(&self, detector: Detector) -> Option<f64> {
        self.p_activity_error(detector)
            .map(|p| Self::ci_halfwidth(p, self.n_valid))
    }

    pub fn ser_ci(&self, decoder: Decoder) -> Option<f64> {
        self.ser(decoder)
            .map(|p| Self::ci_halfwidth(p, self.symbols_total))
    }
}

/// Per-SNR aggregates for a whole experiment, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsAggregate {
    pub points: Vec<SnrMetrics>,
}

impl MetricsAggregate {
    /// Order-independent reduction: counts are integer sums over the trial
    /// records, grouped by grid position.
    pub fn from_records(snr_grid_db: &[f64], records: &[TrialRecord]) -> Self {
        let mut points: Vec<SnrMetrics> = snr_grid_db.iter().map(|&s| SnrMetrics::new(s)).collect();
        for record in records {
            let point = points
                .iter_mut()
                .find(|p| p.snr_db == record.snr_db)
                .expect("record SNR not on grid");
            point.n_trials += 1;
            match &record.result {
                None => point.n_invalid += 1,
                Some(result) => {
                    point.n_valid += 1;
                    point.cs.record(result.cs_class);
                    point.mmse.record(result.mmse_class);
                    point.errors_cs += result.errors_cs;
                    point.errors_mmse += result.errors_mmse;
                    point.errors_cs_mmse += result.errors_cs_mmse;
                    point.symbols_total += result.symbols_total;
                }
            }
        }
        Self { points }
    }

    pub fn point(&self, snr_db: f64) -> Option<&SnrMetrics> {
        self.points.iter().find(|p| p.snr_db == snr_db)
    }
}
