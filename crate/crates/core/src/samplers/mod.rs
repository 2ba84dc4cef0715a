//! Executable theory variants.
//!
//! - Sequential (T_c): every trial runs forward and is read without
//!   constraint; nothing is rejected.
//! - Rejection (T_nl): trials are post-selected on the constrained
//!   measurement. [`Strategy::Naive`] repeats literal trials;
//!   [`Strategy::Collapsed`] draws from the same conditional distribution
//!   through [`collapsed::CollapsedPlan`] and reports the trial counts a
//!   literal run would have needed, emulated from the estimated acceptance
//!   probability.
//! - Limit (T_eS): for the supported circuits the vanishing-delta limit is
//!   the quantum distribution itself.
//!
//! Work is split into chunks, one per worker. Chunk `k` reads RNG stream `k`
//! and results merge in chunk order, so a run depends only on
//! `(model, seed, workers, targets)`; [`Executor`] decides where chunks run.

pub mod collapsed;

use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

use rand::Rng;

use crate::circuits::{CircuitError, CircuitSpec, Deltas};
use crate::distribution::{DistributionError, OutcomeDistribution};
use crate::hvmodel::{HVModel, SampleResult};
use crate::math;
use crate::metrics::{self, MetricsError};
use crate::qsim::{self, QsimError};
use crate::rng::{stream_rng, BOOKKEEPING_STREAM};

use collapsed::{CollapsedPlan, Scratch};

/// Default trial budget per requested accepted sample.
pub const DEFAULT_TRIALS_PER_ACCEPTED: u64 = 10_000_000;

/// How a run produced its samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Forward trials, unconstrained readout.
    Sequential,
    /// Literal trial-and-reject.
    Naive,
    /// Private kicks integrated out; see [`collapsed`].
    Collapsed,
}

impl Strategy {
    /// Lower-case name.
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Sequential => "sequential",
            Strategy::Naive => "naive",
            Strategy::Collapsed => "collapsed",
        }
    }
}

/// Sampler failures.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SamplerError {
    /// Sequential sampling was handed a constrained measurement.
    #[error("sequential sampling needs an unconstrained measurement")]
    ConstrainedModel,
    /// Rejection sampling was handed an unconstrained measurement or zero tolerance.
    #[error("rejection sampling needs a constrained measurement with positive tolerance")]
    UnconstrainedModel,
    /// Zero samples requested.
    #[error("at least one sample must be requested")]
    NoSamples,
    /// Zero workers.
    #[error("worker count must be at least 1")]
    NoWorkers,
    /// Every trial in the budget was rejected.
    #[error("starvation: {trials} trials, none accepted")]
    Starvation {
        /// Trials spent (literal or emulated).
        trials: u64,
        /// Proposals actually drawn.
        proposals: u64,
    },
    /// Sweep schedule is empty.
    #[error("empty delta schedule")]
    EmptySchedule,
    /// Sweep schedule does not strictly decrease in every component.
    #[error("delta schedule must strictly decrease in every component (row {0})")]
    ScheduleNotDecreasing(usize),
    /// Circuit construction failed.
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    /// Quantum oracle failed.
    #[error(transparent)]
    Quantum(#[from] QsimError),
    /// Distribution assembly failed.
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    /// Metric evaluation failed.
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Mean and standard error of an estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    /// Point estimate.
    pub mean: f64,
    /// Standard error.
    pub stderr: f64,
}

/// Result of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    /// How the samples were produced.
    pub strategy: Strategy,
    /// Accepted trials.
    pub accepted: u64,
    /// Rejected trials (emulated for [`Strategy::Collapsed`]).
    pub rejected: u64,
    /// `accepted / (accepted + rejected)`.
    pub acceptance_rate: f64,
    /// Proposals actually drawn; equals the trial count except for collapsed runs.
    pub proposals: u64,
    /// Estimated probability that one literal trial is accepted.
    pub acceptance_estimate: Estimate,
    /// Proposals whose ratio exceeded the collapsed bound (should be 0).
    pub bound_violations: u64,
    /// Accepted outcome counts, indexed by [`crate::Bitstring::index`].
    pub counts: Vec<u64>,
    /// Empirical distribution of the accepted outcomes.
    pub distribution: OutcomeDistribution,
    /// Run seed.
    pub seed: u64,
    /// Worker (chunk) count.
    pub workers: usize,
    /// Elapsed time, when measured by the caller.
    pub wall_time: Option<Duration>,
}

/// Options for rejection runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RejectionConfig {
    /// Sampling route.
    pub strategy: Strategy,
    /// Chunk count.
    pub workers: usize,
    /// Trial budget; `None` means [`DEFAULT_TRIALS_PER_ACCEPTED`] per accepted sample.
    pub max_trials: Option<u64>,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Collapsed,
            workers: 1,
            max_trials: None,
        }
    }
}

impl RejectionConfig {
    /// Trial budget for `n_accepted` requested samples.
    pub fn budget(&self, n_accepted: u64) -> u64 {
        self.max_trials
            .unwrap_or_else(|| n_accepted.saturating_mul(DEFAULT_TRIALS_PER_ACCEPTED))
    }
}

/// Work handed to one chunk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChunkTask {
    /// Chunk index, also its RNG stream.
    pub index: usize,
    /// Samples (sequential) or accepted samples (rejection) wanted.
    pub target: u64,
    /// Trial or proposal budget.
    pub budget: u64,
}

/// What a chunk runs.
#[derive(Clone, Copy, Debug)]
pub enum Job<'a> {
    /// Forward trials of an unconstrained model.
    Sequential(&'a HVModel),
    /// Literal trials of a constrained model.
    Naive(&'a HVModel),
    /// Collapsed proposals.
    Collapsed(&'a CollapsedPlan),
}

/// Raw output of one chunk.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChunkOutcome {
    /// Trials (or proposals) drawn.
    pub trials: u64,
    /// Accepted outcome indices in draw order.
    pub outcomes: Vec<u32>,
    /// Sum of importance ratios (collapsed only).
    pub ratio_sum: f64,
    /// Sum of squared importance ratios (collapsed only).
    pub ratio_sq_sum: f64,
    /// Ratios above the bound (collapsed only).
    pub bound_violations: u64,
}

/// Splits `target` and `budget` over `workers` chunks, earlier chunks taking the remainders.
pub fn plan_chunks(target: u64, budget: u64, workers: usize) -> Vec<ChunkTask> {
    let w = workers as u64;
    (0..workers)
        .map(|k| {
            let share = |total: u64| total / w + u64::from((k as u64) < total % w);
            ChunkTask {
                index: k,
                target: share(target),
                budget: share(budget),
            }
        })
        .filter(|t| t.target > 0)
        .collect()
}

/// Runs one chunk on its own RNG stream.
pub fn run_chunk(job: Job<'_>, seed: u64, task: ChunkTask) -> ChunkOutcome {
    let mut rng = stream_rng(seed, task.index as u64);
    let mut out = ChunkOutcome::default();
    match job {
        Job::Sequential(model) | Job::Naive(model) => {
            while (out.outcomes.len() as u64) < task.target && out.trials < task.budget {
                out.trials += 1;
                if let SampleResult::Bits(b) = model.trial(&mut rng) {
                    out.outcomes.push(b.index() as u32);
                }
            }
        }
        Job::Collapsed(plan) => {
            let mut scratch = Scratch::default();
            while (out.outcomes.len() as u64) < task.target && out.trials < task.budget {
                out.trials += 1;
                let p = plan.propose(&mut rng, &mut scratch);
                out.ratio_sum += p.ratio;
                out.ratio_sq_sum += p.ratio * p.ratio;
                out.bound_violations += u64::from(p.bound_violated);
                if let Some(b) = p.bits {
                    out.outcomes.push(b.index() as u32);
                }
            }
        }
    }
    out
}

/// Runs a batch of chunks.
pub trait Executor {
    /// Returns one outcome per task, in task order.
    fn execute(&self, job: Job<'_>, seed: u64, tasks: &[ChunkTask]) -> Vec<ChunkOutcome>;
}

/// Runs chunks one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Serial;

impl Executor for Serial {
    fn execute(&self, job: Job<'_>, seed: u64, tasks: &[ChunkTask]) -> Vec<ChunkOutcome> {
        tasks.iter().map(|&t| run_chunk(job, seed, t)).collect()
    }
}

fn counts_of(n_bits: usize, outcomes: impl IntoIterator<Item = u32>) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << n_bits];
    for o in outcomes {
        counts[o as usize] += 1;
    }
    counts
}

/// `n_samples` forward trials of an unconstrained model.
pub fn run_sequential(model: &HVModel, seed: u64, n_samples: u64) -> Result<RunReport, SamplerError> {
    run_sequential_with(&Serial, model, seed, n_samples, 1)
}

/// [`run_sequential`] on `workers` chunks through `executor`.
pub fn run_sequential_with<E: Executor + ?Sized>(
    executor: &E,
    model: &HVModel,
    seed: u64,
    n_samples: u64,
    workers: usize,
) -> Result<RunReport, SamplerError> {
    if model.measurement().constrained {
        return Err(SamplerError::ConstrainedModel);
    }
    if n_samples == 0 {
        return Err(SamplerError::NoSamples);
    }
    if workers == 0 {
        return Err(SamplerError::NoWorkers);
    }
    let tasks = plan_chunks(n_samples, n_samples, workers);
    let outs = executor.execute(Job::Sequential(model), seed, &tasks);
    let counts = counts_of(model.n_wires(), outs.iter().flat_map(|o| o.outcomes.iter().copied()));
    Ok(RunReport {
        strategy: Strategy::Sequential,
        accepted: n_samples,
        rejected: 0,
        acceptance_rate: 1.0,
        proposals: n_samples,
        acceptance_estimate: Estimate { mean: 1.0, stderr: 0.0 },
        bound_violations: 0,
        distribution: OutcomeDistribution::from_counts(model.n_wires(), &counts)?,
        counts,
        seed,
        workers,
        wall_time: None,
    })
}

/// Post-selected run with the default [`RejectionConfig`] except for `max_trials`.
pub fn run_rejection(
    model: &HVModel,
    seed: u64,
    n_accepted: u64,
    max_trials: Option<u64>,
) -> Result<RunReport, SamplerError> {
    let config = RejectionConfig {
        max_trials,
        ..RejectionConfig::default()
    };
    run_rejection_with(&Serial, model, seed, n_accepted, &config)
}

/// Post-selected run: trials until `n_accepted` are accepted or the budget is spent.
pub fn run_rejection_with<E: Executor + ?Sized>(
    executor: &E,
    model: &HVModel,
    seed: u64,
    n_accepted: u64,
    config: &RejectionConfig,
) -> Result<RunReport, SamplerError> {
    let m = model.measurement();
    if !m.constrained || m.tolerance <= 0.0 || m.tolerance.is_nan() {
        return Err(SamplerError::UnconstrainedModel);
    }
    if n_accepted == 0 {
        return Err(SamplerError::NoSamples);
    }
    if config.workers == 0 {
        return Err(SamplerError::NoWorkers);
    }
    let budget = config.budget(n_accepted);
    let tasks = plan_chunks(n_accepted, budget, config.workers);
    let n_bits = model.n_wires();
    let base = |accepted: u64,
                rejected: u64,
                proposals: u64,
                estimate,
                violations,
                outcomes: &mut dyn Iterator<Item = u32>| {
        let counts = counts_of(n_bits, outcomes);
        Ok::<_, SamplerError>(RunReport {
            strategy: config.strategy,
            accepted,
            rejected,
            acceptance_rate: accepted as f64 / (accepted + rejected) as f64,
            proposals,
            acceptance_estimate: estimate,
            bound_violations: violations,
            distribution: OutcomeDistribution::from_counts(n_bits, &counts)?,
            counts,
            seed,
            workers: config.workers,
            wall_time: None,
        })
    };
    match config.strategy {
        Strategy::Sequential => Err(SamplerError::ConstrainedModel),
        Strategy::Naive => {
            let outs = executor.execute(Job::Naive(model), seed, &tasks);
            let trials: u64 = outs.iter().map(|o| o.trials).sum();
            let accepted: u64 = outs.iter().map(|o| o.outcomes.len() as u64).sum();
            if accepted == 0 {
                return Err(SamplerError::Starvation {
                    trials,
                    proposals: trials,
                });
            }
            let p = accepted as f64 / trials as f64;
            let estimate = Estimate {
                mean: p,
                stderr: math::sqrt(p * (1.0 - p) / trials as f64),
            };
            base(
                accepted,
                trials - accepted,
                trials,
                estimate,
                0,
                &mut outs.iter().flat_map(|o| o.outcomes.iter().copied()),
            )
        }
        Strategy::Collapsed => {
            let plan = CollapsedPlan::new(model);
            if plan.bound() <= 0.0 {
                return Err(SamplerError::Starvation {
                    trials: budget,
                    proposals: 0,
                });
            }
            let outs = executor.execute(Job::Collapsed(&plan), seed, &tasks);
            let proposals: u64 = outs.iter().map(|o| o.trials).sum();
            let sum: f64 = outs.iter().map(|o| o.ratio_sum).sum();
            let sq: f64 = outs.iter().map(|o| o.ratio_sq_sum).sum();
            let violations = outs.iter().map(|o| o.bound_violations).sum();
            let nf = proposals as f64;
            let mean = sum / nf;
            let var = (sq / nf - mean * mean).max(0.0);
            let estimate = Estimate {
                mean,
                stderr: math::sqrt(var / nf),
            };
            let drawn: Vec<u32> = outs.iter().flat_map(|o| o.outcomes.iter().copied()).collect();
            let (accepted, rejected) = emulate_trials(seed, drawn.len() as u64, mean, budget);
            if accepted == 0 {
                return Err(SamplerError::Starvation {
                    trials: rejected,
                    proposals,
                });
            }
            base(
                accepted,
                rejected,
                proposals,
                estimate,
                violations,
                &mut drawn.into_iter().take(accepted as usize),
            )
        }
    }
}

/// Trial counts of a literal run with acceptance probability `p` that stops
/// after `n` acceptances or `budget` trials: `(accepted, rejected)`.
pub fn emulate_trials(seed: u64, n: u64, p: f64, budget: u64) -> (u64, u64) {
    if p <= 0.0 || p.is_nan() {
        return (0, budget);
    }
    let mut rng = stream_rng(seed, BOOKKEEPING_STREAM);
    let ln_q = math::ln_1p(-p.min(1.0));
    let mut trials: u64 = 0;
    for i in 0..n {
        let failures = if p >= 1.0 {
            0
        } else {
            let u: f64 = 1.0 - rng.random::<f64>();
            let f = math::floor(math::ln(u) / ln_q);
            if f >= budget as f64 {
                u64::MAX
            } else {
                f as u64
            }
        };
        let next = trials.saturating_add(failures).saturating_add(1);
        if next > budget {
            return (i, budget - i);
        }
        trials = next;
    }
    (n, trials - n)
}

/// Vanishing-delta limit of a supported circuit: its quantum distribution.
pub fn exact_limit_distribution(spec: &CircuitSpec) -> Result<OutcomeDistribution, SamplerError> {
    Ok(qsim::outcome_distribution(&spec.quantum()?, spec.input_bits())?)
}

/// Checks that `schedule` is non-empty and strictly decreasing componentwise.
pub fn check_schedule(schedule: &[Deltas]) -> Result<(), SamplerError> {
    if schedule.is_empty() {
        return Err(SamplerError::EmptySchedule);
    }
    for (i, pair) in schedule.windows(2).enumerate() {
        if !pair[1].strictly_below(&pair[0]) {
            return Err(SamplerError::ScheduleNotDecreasing(i + 1));
        }
    }
    Ok(())
}

/// One finished sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    /// Accepted trials.
    pub accepted: u64,
    /// Rejected trials.
    pub rejected: u64,
    /// Acceptance rate.
    pub acceptance_rate: f64,
    /// Additive error against the exact limit.
    pub additive_error: f64,
    /// Sum of 95% Wilson radii.
    pub additive_error_ci95: f64,
    /// Estimated literal acceptance probability.
    pub acceptance_estimate: Estimate,
}

/// One sweep row; starvation and other failures stay in-row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    /// Deltas of this row.
    pub deltas: Deltas,
    /// Seed used (`sweep seed + row index`).
    pub seed: u64,
    /// Outcome.
    pub result: Result<SweepPoint, SamplerError>,
}

/// Runs the constrained model of `spec` at every schedule point and scores it against the exact limit.
pub fn convergence_sweep(
    spec: &CircuitSpec,
    schedule: &[Deltas],
    seed: u64,
    n_accepted: u64,
    config: &RejectionConfig,
) -> Result<Vec<SweepRow>, SamplerError> {
    convergence_sweep_with(&Serial, spec, schedule, seed, n_accepted, config)
}

/// [`convergence_sweep`] through `executor`.
pub fn convergence_sweep_with<E: Executor + ?Sized>(
    executor: &E,
    spec: &CircuitSpec,
    schedule: &[Deltas],
    seed: u64,
    n_accepted: u64,
    config: &RejectionConfig,
) -> Result<Vec<SweepRow>, SamplerError> {
    check_schedule(schedule)?;
    let exact = exact_limit_distribution(spec)?;
    let mut rows = Vec::with_capacity(schedule.len());
    for (i, &deltas) in schedule.iter().enumerate() {
        let row_seed = seed.wrapping_add(i as u64);
        let result = spec
            .hv(deltas)
            .map_err(SamplerError::from)
            .and_then(|model| run_rejection_with(executor, &model, row_seed, n_accepted, config))
            .and_then(|report| {
                let err = metrics::error_report(&report.distribution, &exact)?;
                Ok(SweepPoint {
                    accepted: report.accepted,
                    rejected: report.rejected,
                    acceptance_rate: report.acceptance_rate,
                    additive_error: err.additive,
                    additive_error_ci95: err.additive_ci95.unwrap_or(0.0),
                    acceptance_estimate: report.acceptance_estimate,
                })
            });
        rows.push(SweepRow {
            deltas,
            seed: row_seed,
            result,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (math::ln(x), math::ln(y));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
