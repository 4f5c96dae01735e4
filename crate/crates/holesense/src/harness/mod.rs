//! Deterministic Monte-Carlo experiment runner.
//!
//! Every trial derives its own random stream from
//! `(master_seed, snr_index, trial_index)`: the generator is seeded with
//! `master_seed` and its stream id set to `snr_index << 32 | trial_index`.
//! Within a trial the draw order is fixed: active set, symbols (per active
//! user, ascending), channel taps (per antenna-user pair, row major), noise.
//! Trials are therefore independent work units, results are identical for
//! any worker count, and re-runs are bit-identical.

mod metrics;
mod output;

pub use metrics::{Decoder, Detector, MetricsAggregate, SnrMetrics};
pub use output::{emit_outputs, metrics_csv_string, trials_csv_string, OutputOptions};

use crate::channel::{MultipathProfile, NoiseModel, StructuredChannel};
use crate::detector::{
    classify_outcome, detect_cs, detect_mmse_baseline, ActivityVector, OutcomeClass,
};
use crate::mmse::{count_symbol_errors, decode_cs_mmse, decode_cs_standalone, decode_mmse_standalone};
use crate::signal::{assemble_transmit, sample_symbols, Alphabet, AlphabetName, BlockVec};
use crate::solver::{
    solve_constrained_with, GroupSparseProblem, SolverChoice, SolverDiagnostics, SolverStatus,
    KKT_TOL, MAX_INNER_ITERATIONS,
};
use crate::{Complex, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// How the residual bound is derived from the noise level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonMode {
    /// `epsilon = sqrt(sigma_n^2 * N_S * L)` — the root of the expected
    /// noise energy, so the bound sits at the noise norm's natural scale.
    /// Default.
    Rms,
    /// `epsilon = 0.5 * sigma_n^2 * N_S * L` — the literal energy-scaled
    /// form of the printed bound; grows linearly in `L` and goes slack at
    /// moderate sizes. Kept selectable for comparison.
    PaperLiteral,
}

impl EpsilonMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rms" => Some(Self::Rms),
            "paper-literal" => Some(Self::PaperLiteral),
            _ => None,
        }
    }

    pub fn epsilon(&self, sigma_n_sq: f64, n_rx: usize, n_subcarriers: usize) -> f64 {
        let energy = sigma_n_sq * (n_rx * n_subcarriers) as f64;
        match self {
            Self::Rms => energy.sqrt(),
            Self::PaperLiteral => 0.5 * energy,
        }
    }
}

impl std::fmt::Display for EpsilonMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Rms => write!(f, "rms"),
            Self::PaperLiteral => write!(f, "paper-literal"),
        }
    }
}

/// Full description of one experiment; everything that affects results is
/// here (worker count deliberately is not).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    /// Potential users `N_P`.
    pub n_users: usize,
    /// Listener antennas `N_S`.
    pub n_rx: usize,
    /// Base-station antennas `N_BS`; recorded for provenance only.
    pub n_bs: usize,
    /// Active users per trial.
    pub n_active: usize,
    /// Subcarriers per user block `L`.
    pub n_subcarriers: usize,
    pub alphabet: AlphabetName,
    pub n_taps: usize,
    pub snr_grid_db: Vec<f64>,
    pub n_trials: usize,
    pub master_seed: u64,
    pub solver: SolverChoice,
    pub epsilon_mode: EpsilonMode,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_users == 0 || self.n_rx == 0 || self.n_subcarriers == 0 {
            return Err(Error::Config("dimensions must be positive".into()));
        }
        if self.n_active > self.n_users {
            return Err(Error::Config(format!(
                "{} active users exceed {} potential users",
                self.n_active, self.n_users
            )));
        }
        if self.n_bs < self.n_users {
            return Err(Error::Config(format!(
                "base station needs at least {} antennas, got {}",
                self.n_users, self.n_bs
            )));
        }
        if self.n_taps == 0 || self.n_taps > self.n_subcarriers {
            return Err(Error::Config(format!(
                "{} taps incompatible with {} subcarriers",
                self.n_taps, self.n_subcarriers
            )));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("need at least one trial".into()));
        }
        if self.n_trials as u64 > u32::MAX as u64 || self.snr_grid_db.len() as u64 > u32::MAX as u64
        {
            return Err(Error::Config("trial/grid counts exceed the stream id space".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("SNR grid is empty".into()));
        }
        Ok(())
    }
}

/// Parses `start:stop:step` (inclusive) or a single value, in dB.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>, Error> {
    let bad = |msg: &str| Error::Config(format!("SNR grid '{s}': {msg}"));
    if let Some((start, rest)) = s.split_once(':') {
        let (stop, step) = rest
            .split_once(':')
            .ok_or_else(|| bad("expected start:stop:step"))?;
        let start: f64 = start.trim().parse().map_err(|_| bad("bad start"))?;
        let stop: f64 = stop.trim().parse().map_err(|_| bad("bad stop"))?;
        let step: f64 = step.trim().parse().map_err(|_| bad("bad step"))?;
        if step <= 0.0 {
            return Err(bad("step must be positive"));
        }
        if stop < start {
            return Err(bad("stop below start"));
        }
        let mut grid = Vec::new();
        let mut i = 0u32;
        loop {
            let v = start + step * i as f64;
            if v > stop + 1e-9 {
                break;
            }
            grid.push(v);
            i += 1;
        }
        Ok(grid)
    } else {
        let v: f64 = s.trim().parse().map_err(|_| bad("bad value"))?;
        Ok(vec![v])
    }
}

/// Everything drawn for one trial.
pub(crate) struct TrialInputs {
    pub truth: ActivityVector,
    pub transmitted: BlockVec,
    pub channel: StructuredChannel,
    pub y: Vec<Complex>,
    pub sigma_n_sq: f64,
    pub epsilon: f64,
}

pub(crate) fn trial_inputs(
    config: &ExperimentConfig,
    snr_index: usize,
    trial_index: usize,
) -> TrialInputs {
    let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
    rng.set_stream(((snr_index as u64) << 32) | trial_index as u64);

    let l = config.n_subcarriers;
    let alphabet = Alphabet::new(config.alphabet);

    // 1. Active set (uniform subset of the configured cardinality).
    let mut pattern =
        rand::seq::index::sample(&mut rng, config.n_users, config.n_active).into_vec();
    pattern.sort_unstable();
    let truth = ActivityVector::from_pattern(config.n_users, &pattern);

    // 2. Symbols, ascending user order.
    let symbols: Vec<Vec<Complex>> = (0..config.n_active)
        .map(|_| sample_symbols(&alphabet, l, &mut rng))
        .collect();
    let transmitted = assemble_transmit(&truth, &symbols, l).expect("validated config");

    // 3. Channel.
    let profile = MultipathProfile::equal_taps(config.n_taps);
    let channel = StructuredChannel::draw(&profile, config.n_rx, config.n_users, l, &mut rng)
        .expect("validated config");

    // 4. Noise.
    let noise_model = NoiseModel::from_snr_db(config.snr_grid_db[snr_index]);
    let noise = noise_model.draw(channel.output_len(), &mut rng);

    let mut y = channel.apply(&transmitted);
    for (yi, ni) in y.iter_mut().zip(&noise) {
        *yi += ni;
    }
    let sigma_n_sq = noise_model.sigma_sq();
    let epsilon = config.epsilon_mode.epsilon(sigma_n_sq, config.n_rx, l);
    TrialInputs {
        truth,
        transmitted,
        channel,
        y,
        sigma_n_sq,
        epsilon,
    }
}

/// Detection and decoding results of one valid trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub cs_estimate: ActivityVector,
    pub cs_class: OutcomeClass,
    pub mmse_estimate: ActivityVector,
    pub mmse_class: OutcomeClass,
    pub errors_cs: u64,
    pub errors_mmse: u64,
    pub errors_cs_mmse: u64,
    pub symbols_total: u64,
}

/// One trial's record; `result` is `None` when the solver failed and the
/// trial is invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub trial_index: usize,
    pub truth: ActivityVector,
    pub solver_status: SolverStatus,
    pub solver_iterations: usize,
    pub lambda_final: Option<f64>,
    pub residual_norm: f64,
    pub rank_deficient: bool,
    pub result: Option<TrialResult>,
}

/// Runs one trial: draws inputs from the trial's own random stream, runs
/// both detectors and all three decoders, and returns the outcome record.
pub fn run_trial(config: &ExperimentConfig, snr_index: usize, trial_index: usize) -> TrialRecord {
    let inputs = trial_inputs(config, snr_index, trial_index);
    let snr_db = config.snr_grid_db[snr_index];
    let alphabet = Alphabet::new(config.alphabet);
    let ext = alphabet.extend();
    let problem = GroupSparseProblem::new(&inputs.channel, &inputs.y, inputs.epsilon);

    let detection = match detect_cs(&problem, &ext, config.solver) {
        Ok(d) => d,
        Err(failure) => {
            return TrialRecord {
                snr_db,
                trial_index,
                truth: inputs.truth,
                solver_status: failure.status,
                solver_iterations: failure.iterations,
                lambda_final: None,
                residual_norm: failure.residual_norm,
                rank_deficient: false,
                result: None,
            }
        }
    };

    let cs_outcome = classify_outcome(&inputs.truth, &detection.activity);
    let mmse_activity =
        detect_mmse_baseline(&inputs.channel, &inputs.y, inputs.sigma_n_sq, &ext);
    let mmse_outcome = classify_outcome(&inputs.truth, &mmse_activity);

    let d_cs = decode_cs_standalone(detection.reconstruction(), &detection.activity, &alphabet);
    let d_mmse = decode_mmse_standalone(&inputs.channel, &inputs.y, inputs.sigma_n_sq, &ext);
    let d_cs_mmse = decode_cs_mmse(
        &inputs.channel,
        &inputs.y,
        inputs.sigma_n_sq,
        &detection.activity,
        &alphabet,
    );

    let (errors_cs, symbols_total) = count_symbol_errors(&inputs.truth, &inputs.transmitted, &d_cs);
    let (errors_mmse, _) = count_symbol_errors(&inputs.truth, &inputs.transmitted, &d_mmse);
    let (errors_cs_mmse, _) =
        count_symbol_errors(&inputs.truth, &inputs.transmitted, &d_cs_mmse);

    TrialRecord {
        snr_db,
        trial_index,
        truth: inputs.truth,
        solver_status: detection.report.status,
        solver_iterations: detection.report.iterations,
        lambda_final: detection.report.lambda_final,
        residual_norm: detection.report.residual_norm,
        rank_deficient: detection.report.rank_deficient,
        result: Some(TrialResult {
            cs_estimate: detection.activity,
            cs_class: cs_outcome.class,
            mmse_estimate: mmse_activity,
            mmse_class: mmse_outcome.class,
            errors_cs,
            errors_mmse,
            errors_cs_mmse,
            symbols_total,
        }),
    }
}

/// Aggregate plus the raw per-trial records.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub aggregate: MetricsAggregate,
    pub records: Vec<TrialRecord>,
}

/// Runs the whole grid on `workers` threads (0 = rayon default). Records are
/// collected in `(snr, trial)` order and reduced sequentially, so the output
/// is identical for every worker count.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentRun, Error> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        (0..config.snr_grid_db.len())
            .flat_map(|snr_index| (0..config.n_trials).map(move |t| (snr_index, t)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(snr_index, trial_index)| run_trial(config, snr_index, trial_index))
            .collect()
    });
    let aggregate = MetricsAggregate::from_records(&config.snr_grid_db, &records);
    Ok(ExperimentRun {
        config: config.clone(),
        aggregate,
        records,
    })
}

/// Re-derives one trial's problem and records the constrained solver's
/// penalty path for it. Used by the CLI's solver-trace flag; runs outside
/// the measured experiment, so diagnostics cannot perturb results.
pub fn trace_solver(
    config: &ExperimentConfig,
    snr_index: usize,
    trial_index: usize,
) -> SolverDiagnostics {
    let inputs = trial_inputs(config, snr_index, trial_index);
    let problem = GroupSparseProblem::new(&inputs.channel, &inputs.y, inputs.epsilon);
    let mut diag = SolverDiagnostics::default();
    let _ = solve_constrained_with(&problem, KKT_TOL, MAX_INNER_ITERATIONS, Some(&mut diag));
    diag
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            n_users: 4,
            n_rx: 2,
            n_bs: 4,
            n_active: 1,
            n_subcarriers: 8,
            alphabet: AlphabetName::Qpsk,
            n_taps: 2,
            snr_grid_db: vec![10.0, 20.0],
            n_trials: 20,
            master_seed: 7,
            solver: SolverChoice::BlockOmp,
            epsilon_mode: EpsilonMode::Rms,
        }
    }

    #[test]
    fn snr_grid_parsing() {
        assert_eq!(parse_snr_grid("0:30:5").unwrap(), vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        assert_eq!(parse_snr_grid("10").unwrap(), vec![10.0]);
        assert_eq!(parse_snr_grid("-5:5:2.5").unwrap(), vec![-5.0, -2.5, 0.0, 2.5, 5.0]);
        assert!(parse_snr_grid("5:0:5").is_err());
        assert!(parse_snr_grid("0:10:0").is_err());
        assert!(parse_snr_grid("abc").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = tiny_config();
        assert!(c.validate().is_ok());
        c.n_active = 5;
        assert!(c.validate().is_err());
        c = tiny_config();
        c.n_bs = 3;
        assert!(c.validate().is_err());
        c = tiny_config();
        c.n_taps = 9;
        assert!(c.validate().is_err());
        c = tiny_config();
        c.n_trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn epsilon_modes() {
        // sigma^2 = 0.1, N_S = 4, L = 72: energy = 28.8.
        let rms = EpsilonMode::Rms.epsilon(0.1, 4, 72);
        approx::assert_abs_diff_eq!(rms, 28.8f64.sqrt(), epsilon = 1e-12);
        let lit = EpsilonMode::PaperLiteral.epsilon(0.1, 4, 72);
        approx::assert_abs_diff_eq!(lit, 14.4, epsilon = 1e-12);
    }

    #[test]
    fn trials_are_bit_identical() {
        let config = tiny_config();
        let a = run_trial(&config, 1, 3);
        let b = run_trial(&config, 1, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn different_trials_differ() {
        let config = tiny_config();
        let a = run_trial(&config, 0, 0);
        let b = run_trial(&config, 0, 1);
        assert_ne!((a.truth.clone(), a.residual_norm), (b.truth, b.residual_norm));
    }

    #[test]
    fn experiment_invariant_to_worker_count() {
        let config = tiny_config();
        let one = run_experiment(&config, 1).unwrap();
        let many = run_experiment(&config, 4).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn accounting_valid_plus_invalid() {
        let config = tiny_config();
        let run = run_experiment(&config, 0).unwrap();
        for point in &run.aggregate.points {
            assert_eq!(point.n_valid + point.n_invalid, config.n_trials as u64);
        }
    }

    #[test]
    fn single_trial_aggregate_is_indicator() {
        let mut config = tiny_config();
        config.n_trials = 1;
        config.snr_grid_db = vec![15.0];
        let run = run_experiment(&config, 1).unwrap();
        let point = &run.aggregate.points[0];
        if point.n_valid == 1 {
            let p = point.p_activity_error(Detector::Cs).unwrap();
            assert!(p == 0.0 || p == 1.0);
        }
    }

    #[test]
    fn noiseless_limit_detects_exactly() {
        // Very high SNR: detection must be exact and SER zero in nearly all
        // trials for both solver routes.
        for solver in [SolverChoice::ConstrainedFista, SolverChoice::BlockOmp] {
            let mut config = tiny_config();
            config.solver = solver;
            config.snr_grid_db = vec![80.0];
            config.n_trials = 50;
            config.n_active = 1;
            let run = run_experiment(&config, 0).unwrap();
            let point = &run.aggregate.points[0];
            assert!(point.n_valid >= 49, "{solver}: too many invalid trials");
            let p_err = point.p_activity_error(Detector::Cs).unwrap();
            assert!(p_err <= 0.02, "{solver}: activity error {p_err}");
            let ser = point.ser(Decoder::CsMmse).unwrap();
            assert!(ser <= 0.01, "{solver}: ser {ser}");
        }
    }
}
