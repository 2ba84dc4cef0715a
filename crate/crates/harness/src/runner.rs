//! Threaded execution of sampler chunks.

use std::time::Instant;

use retrolab_core::circuits::{CircuitError, CircuitSpec, Deltas};
use retrolab_core::hvmodel::HVModel;
use retrolab_core::metrics;
use retrolab_core::samplers::{
    self, ChunkOutcome, ChunkTask, Executor, Job, RejectionConfig, RunReport, SamplerError, SweepPoint, SweepRow,
};
use retrolab_core::OutcomeDistribution;

use crate::config::{ConfigError, ExperimentConfig, Variant};

/// Runs every chunk on its own scoped thread and returns outcomes in chunk order.
#[derive(Clone, Copy, Debug, Default)]
pub struct Threaded;

impl Executor for Threaded {
    fn execute(&self, job: Job<'_>, seed: u64, tasks: &[ChunkTask]) -> Vec<ChunkOutcome> {
        if tasks.len() <= 1 {
            return tasks.iter().map(|&t| samplers::run_chunk(job, seed, t)).collect();
        }
        std::thread::scope(|s| {
            let handles: Vec<_> = tasks
                .iter()
                .map(|&t| s.spawn(move || samplers::run_chunk(job, seed, t)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampler chunk panicked"))
                .collect()
        })
    }
}

/// Sequential run on worker threads, with wall time.
pub fn run_sequential(model: &HVModel, seed: u64, n: u64, workers: usize) -> Result<RunReport, SamplerError> {
    let start = Instant::now();
    let mut report = samplers::run_sequential_with(&Threaded, model, seed, n, workers)?;
    report.wall_time = Some(start.elapsed());
    Ok(report)
}

/// Rejection run on worker threads, with wall time.
pub fn run_rejection(model: &HVModel, seed: u64, n: u64, config: &RejectionConfig) -> Result<RunReport, SamplerError> {
    let start = Instant::now();
    let mut report = samplers::run_rejection_with(&Threaded, model, seed, n, config)?;
    report.wall_time = Some(start.elapsed());
    Ok(report)
}

/// Convergence sweep on worker threads.
pub fn convergence_sweep(
    spec: &CircuitSpec,
    schedule: &[Deltas],
    seed: u64,
    n: u64,
    config: &RejectionConfig,
) -> Result<Vec<SweepRow>, SamplerError> {
    samplers::convergence_sweep_with(&Threaded, spec, schedule, seed, n, config)
}

/// Result of one configured run.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    /// Sampled by `t_c` or `t_nl`.
    Sampled(RunReport),
    /// The exact `t_es_limit` distribution.
    Exact(OutcomeDistribution),
}

/// Failure of a configured run.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Invalid configuration.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Circuit construction failed.
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    /// Sampling failed.
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// The hidden-variable model a resolved config runs, if its variant has one.
pub fn model_for(config: &ExperimentConfig, spec: &CircuitSpec) -> Result<HVModel, RunError> {
    let d = config.deltas;
    Ok(match config.variant {
        Variant::TC => spec.causal_hv(d.phi_l, d.alpha)?,
        Variant::TNl | Variant::TEsLimit => spec.hv(d.into())?,
    })
}

/// Runs a resolved config: sequential trials for `t_c`, post-selected
/// trials for `t_nl`, the exact quantum distribution for `t_es_limit`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    let spec = config.spec()?;
    match config.variant {
        Variant::TEsLimit => Ok(Outcome::Exact(samplers::exact_limit_distribution(&spec)?)),
        Variant::TC => {
            let model = model_for(config, &spec)?;
            Ok(Outcome::Sampled(run_sequential(
                &model,
                config.seed,
                config.samples,
                config.workers,
            )?))
        }
        Variant::TNl => {
            let model = model_for(config, &spec)?;
            Ok(Outcome::Sampled(run_rejection(
                &model,
                config.seed,
                config.samples,
                &config.rejection(),
            )?))
        }
    }
}

/// A `t_nl` run of `spec` with the deltas and sampling options of `config`,
/// scored against the exact distribution.
pub fn sweep_point(spec: &CircuitSpec, config: &ExperimentConfig) -> Result<SweepPoint, SamplerError> {
    let exact = samplers::exact_limit_distribution(spec)?;
    let model = spec.hv(config.deltas.into())?;
    let r = run_rejection(&model, config.seed, config.samples, &config.rejection())?;
    let err = metrics::error_report(&r.distribution, &exact)?;
    Ok(SweepPoint {
        accepted: r.accepted,
        rejected: r.rejected,
        acceptance_rate: r.acceptance_rate,
        additive_error: err.additive,
        additive_error_ci95: err.additive_ci95.unwrap_or(0.0),
        acceptance_estimate: r.acceptance_estimate,
    })
}
