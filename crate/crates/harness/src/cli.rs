//! The `retrolab` command line.
//!
//! Exit codes: 0 success, 2 usage, 3 starvation, 4 verdict fails,
//! 5 inconclusive. Other failures (IO, internal) exit with 1.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use retrolab_core::circuits::{CircuitId, Deltas};
use retrolab_core::metrics::{self, LemmaVerdict, Verdict};
use retrolab_core::samplers::{self, log_log_slope, SamplerError};
use retrolab_core::Bitstring;

use crate::config::{ConfigError, DeltasConfig, ExperimentConfig, RejectionStrategy, Variant};
use crate::formats::{self, CircuitFile, ErrorReportFile, FormatError, ModelFile, ReportFile, ScanRow};
use crate::runner::{self, Outcome, RunError};

/// Success.
pub const EXIT_OK: u8 = 0;
/// IO or internal failure.
pub const EXIT_FAILURE: u8 = 1;
/// Bad flags or config.
pub const EXIT_USAGE: u8 = 2;
/// The trial budget ran out before the requested samples were accepted.
pub const EXIT_STARVATION: u8 = 3;
/// The verdict is `fails` (or a lemma counterexample was found).
pub const EXIT_FAILS: u8 = 4;
/// The verdict is `inconclusive` (or a lemma premise does not hold).
pub const EXIT_INCONCLUSIVE: u8 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "retrolab",
    version,
    about = "Retro-causal hidden-variable circuit laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one variant and write report, distribution, circuit and model files.
    Simulate(SimulateArgs),
    /// Score a run (or a candidate file) against the exact quantum distribution.
    Compare(CompareArgs),
    /// Run the post-selected model over a decreasing delta schedule and write CSV.
    Sweep(SweepArgs),
    /// Check the conditioned-probability lemma on two distribution files.
    CheckLemma(CheckLemmaArgs),
    /// Scan double-Bell analyzer angles over a grid and write CSV.
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// malus, epr or double_bell_cnot.
    #[arg(long)]
    circuit: Option<String>,
    /// Malus preparation bit (0 or 1).
    #[arg(long, value_parser = parse_bit)]
    x: Option<bool>,
    #[arg(long, allow_negative_numbers = true)]
    theta1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta3: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta4: Option<f64>,
    /// t_c, t_nl or t_es_limit.
    #[arg(long)]
    variant: Option<Variant>,
    /// Sets δφ_L, δφ_M and δα together.
    #[arg(long)]
    deltas: Option<f64>,
    /// δφ_L.
    #[arg(long = "delta-phi-l")]
    delta_phi_l: Option<f64>,
    /// δφ_M.
    #[arg(long = "delta-phi-m")]
    delta_phi_m: Option<f64>,
    /// δα.
    #[arg(long = "delta-alpha")]
    delta_alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Accepted samples for t_nl, plain samples for t_c.
    #[arg(long, visible_alias = "samples")]
    accepted: Option<u64>,
    /// Trial budget for t_nl.
    #[arg(long)]
    max_trials: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// naive or collapsed.
    #[arg(long)]
    strategy: Option<RejectionStrategy>,
    #[arg(long)]
    extra_kick_layers: Option<usize>,
    #[arg(long)]
    drop_second_kick: bool,
    /// Output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.circuit {
            c.circuit = v.clone();
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {$(
                if let Some(v) = self.$flag.clone() {
                    c.$field = Some(v);
                }
            )*};
        }
        set!(x => x, theta1 => theta1, theta2 => theta2, theta3 => theta3, theta4 => theta4,
             max_trials => max_trials, out_dir => out_dir);
        if let Some(v) = self.variant {
            c.variant = v;
        }
        if let Some(d) = self.deltas {
            c.deltas = DeltasConfig {
                phi_l: d,
                phi_m: d,
                alpha: d,
            };
        }
        if let Some(v) = self.delta_phi_l {
            c.deltas.phi_l = v;
        }
        if let Some(v) = self.delta_phi_m {
            c.deltas.phi_m = v;
        }
        if let Some(v) = self.delta_alpha {
            c.deltas.alpha = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.accepted {
            c.samples = v;
        }
        if let Some(v) = self.workers {
            c.workers = v;
        }
        if let Some(v) = self.strategy {
            c.strategy = v;
        }
        if let Some(v) = self.extra_kick_layers {
            c.extra_kick_layers = v;
        }
        if self.drop_second_kick {
            c.drop_second_kick = true;
        }
        c.resolve()
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Additive-error threshold.
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Distribution file used instead of running the configured variant.
    #[arg(long)]
    candidate: Option<PathBuf>,
    /// Distribution file used instead of the exact quantum distribution.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated schedule; each entry is `d` (all deltas equal) or `phi_l:phi_m:alpha`.
    #[arg(long, allow_hyphen_values = true)]
    schedule: String,
    /// CSV path; defaults to `sweep.csv` in the output directory, or stdout without one.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckLemmaArgs {
    /// Reference distribution file.
    #[arg(long)]
    d: PathBuf,
    /// Candidate distribution file.
    #[arg(long)]
    c: Option<PathBuf>,
    /// Multiplicative-error premise.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Print the conditioned probability of `--d` at `k:b:y'` (bit k of y' is ignored).
    #[arg(long, value_parser = parse_condition)]
    conditioned: Option<(usize, bool, Bitstring)>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated angle values.
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Which angles vary over the grid (comma-separated 1-4); the rest keep their configured values.
    #[arg(long, default_value = "1,2,3,4")]
    vary: String,
    /// CSV path; defaults to `scan.csv` in the output directory, or stdout without one.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_bit(s: &str) -> Result<bool, String> {
    match s {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        _ => Err(format!("expected 0 or 1, got {s:?}")),
    }
}

fn parse_condition(s: &str) -> Result<(usize, bool, Bitstring), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [k, b, y] = parts[..] else {
        return Err(format!("expected k:b:y', got {s:?}"));
    };
    let k = k.parse().map_err(|_| format!("bad bit index {k:?}"))?;
    let b = parse_bit(b)?;
    let y = y.parse().map_err(|e| format!("bad bitstring {y:?}: {e}"))?;
    Ok((k, b, y))
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("not a number: {v:?}")))
        .collect()
}

fn parse_schedule(s: &str) -> Result<Vec<Deltas>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|entry| {
            let values = entry
                .split(':')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>();
            match values.as_deref() {
                Ok([d]) => Ok(Deltas::equal(*d)),
                Ok([phi_l, phi_m, alpha]) => Ok(Deltas {
                    phi_l: *phi_l,
                    phi_m: *phi_m,
                    alpha: *alpha,
                }),
                _ => Err(format!("bad schedule entry {entry:?}")),
            }
        })
        .collect()
}

/// A failed command and its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Field { .. } => Failure::usage(e.to_string()),
            ConfigError::File(f) => f.into(),
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        let code = match e {
            FormatError::Json { .. } | FormatError::Content { .. } => EXIT_USAGE,
            FormatError::Io { .. } | FormatError::Csv(_) => EXIT_FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Sampler(SamplerError::Starvation { .. }) => Self {
                code: EXIT_STARVATION,
                message: e.to_string(),
            },
            RunError::Config(c) => c.into(),
            other => Self {
                code: EXIT_USAGE,
                message: other.to_string(),
            },
        }
    }
}

impl From<SamplerError> for Failure {
    fn from(e: SamplerError) -> Self {
        RunError::from(e).into()
    }
}

impl From<metrics::MetricsError> for Failure {
    fn from(e: metrics::MetricsError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Holds => EXIT_OK,
        Verdict::Fails => EXIT_FAILS,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Writes report, distribution, circuit and model files for `outcome` into `dir`.
pub fn write_run_files(dir: &Path, config: &ExperimentConfig, outcome: &Outcome) -> Result<ReportFile, FormatError> {
    let spec = config.spec().map_err(|e| FormatError::Content {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let report = match outcome {
        Outcome::Sampled(r) => ReportFile::from_run(config, r),
        Outcome::Exact(d) => ReportFile::from_exact(config, d),
    };
    formats::write_json(&dir.join("report.json"), &report)?;
    formats::write_json(&dir.join("distribution.json"), &report.distribution)?;
    if let Ok(q) = spec.quantum() {
        formats::write_json(&dir.join("circuit.json"), &CircuitFile::new(&q, spec.input_bits()))?;
    }
    if let Ok(model) = runner::model_for(config, &spec) {
        formats::write_json(&dir.join("model.json"), &ModelFile::new(&model))?;
    }
    Ok(report)
}

fn simulate(args: SimulateArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let config = args.experiment.config()?;
    let outcome = runner::run_experiment(&config)?;
    let dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let report = write_run_files(&dir, &config, &outcome)?;
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    )?;
    if let Outcome::Sampled(r) = &outcome {
        if let Some(t) = r.wall_time {
            eprintln!("wall time {:.3} s", t.as_secs_f64());
        }
        if r.accepted < config.samples {
            eprintln!(
                "trial budget spent after {} of {} accepted samples",
                r.accepted, config.samples
            );
        }
    }
    Ok(EXIT_OK)
}

fn compare(args: CompareArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    if !(args.epsilon > 0.0 && args.epsilon.is_finite()) {
        return Err(Failure::usage("invalid epsilon: must be positive"));
    }
    let injected = args.candidate.is_some() && args.reference.is_some();
    let config = if injected {
        None
    } else {
        Some(args.experiment.config()?)
    };
    let reference = match (&args.reference, &config) {
        (Some(path), _) => formats::read_distribution(path)?,
        (None, Some(c)) => samplers::exact_limit_distribution(&c.spec()?)?,
        (None, None) => unreachable!("a missing reference implies a config"),
    };
    let (candidate, run) = match (&args.candidate, &config) {
        (Some(path), _) => (formats::read_distribution(path)?, None),
        (None, Some(c)) => {
            let outcome = runner::run_experiment(c)?;
            let (d, report) = match &outcome {
                Outcome::Sampled(r) => (r.distribution.clone(), ReportFile::from_run(c, r)),
                Outcome::Exact(d) => (d.clone(), ReportFile::from_exact(c, d)),
            };
            (d, Some(report))
        }
        (None, None) => unreachable!("a missing candidate implies a config"),
    };
    let report = metrics::error_report(&candidate, &reference)?;
    let file = ErrorReportFile::new(config.as_ref(), &report, args.epsilon, run);
    if let Some(dir) = config
        .as_ref()
        .and_then(|c| c.out_dir.clone())
        .or_else(|| args.experiment.out_dir.clone())
    {
        formats::write_json(&dir.join("error_report.json"), &file)?;
    }
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&file).expect("report serializes")
    )?;
    Ok(verdict_code(report.additive_verdict(args.epsilon)))
}

fn csv_sink(output: Option<PathBuf>, out_dir: Option<&Path>, name: &str) -> Option<PathBuf> {
    output.or_else(|| out_dir.map(|d| d.join(name)))
}

fn write_csv_to(
    path: Option<&Path>,
    out: &mut dyn Write,
    write: impl FnOnce(&mut dyn Write) -> Result<(), FormatError>,
) -> Result<(), Failure> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut file = std::fs::File::create(p)?;
            write(&mut file)?;
        }
        None => write(out)?,
    }
    Ok(())
}

fn sweep(args: SweepArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let schedule = parse_schedule(&args.schedule).map_err(Failure::usage)?;
    if schedule.is_empty() {
        return Err(Failure::usage("invalid schedule: empty"));
    }
    let config = args.experiment.config()?;
    if config.variant != Variant::TNl {
        return Err(Failure::usage("invalid variant: sweeps run t_nl"));
    }
    let rows = runner::convergence_sweep(
        &config.spec()?,
        &schedule,
        config.seed,
        config.samples,
        &config.rejection(),
    )
    .map_err(|e| match e {
        SamplerError::EmptySchedule | SamplerError::ScheduleNotDecreasing(_) => Failure::usage(e.to_string()),
        other => other.into(),
    })?;
    let path = csv_sink(args.output, config.out_dir.as_deref(), "sweep.csv");
    write_csv_to(path.as_deref(), out, |w| formats::write_sweep_csv(w, &rows))?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|p| (r.deltas.phi_m, p.acceptance_rate)))
        .collect();
    if points.len() >= 2 {
        let tail = &points[points.len().saturating_sub(3)..];
        eprintln!(
            "acceptance-rate log-log slope over the last {} points: {:.3}",
            tail.len(),
            log_log_slope(tail)
        );
    }
    let starved = rows
        .iter()
        .any(|r| matches!(r.result, Err(SamplerError::Starvation { .. })));
    Ok(if starved { EXIT_STARVATION } else { EXIT_OK })
}

fn check_lemma(args: CheckLemmaArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let d = formats::read_distribution(&args.d)?;
    if let Some((k, b, y)) = args.conditioned {
        let p = metrics::conditioned_probability(&d, k, b, y)?;
        writeln!(out, "conditioned k={k} b={} y'={y}: {p}", u8::from(b))?;
    }
    let Some(c_path) = &args.c else {
        if args.conditioned.is_some() {
            return Ok(EXIT_OK);
        }
        return Err(Failure::usage("missing --c (or --conditioned)"));
    };
    let eps = args.epsilon.ok_or_else(|| Failure::usage("missing --epsilon"))?;
    let c = formats::read_distribution(c_path)?;
    let verdict = metrics::check_lemma_instance(&d, &c, eps)?;
    writeln!(out, "{}", formats::describe_lemma(&verdict))?;
    Ok(match verdict {
        LemmaVerdict::Holds { .. } => EXIT_OK,
        LemmaVerdict::Counterexample { .. } => EXIT_FAILS,
        LemmaVerdict::PremiseFailed(_) => EXIT_INCONCLUSIVE,
    })
}

fn scan(args: ScanArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let grid = parse_list(&args.grid).map_err(|e| Failure::usage(format!("invalid grid: {e}")))?;
    if grid.is_empty() {
        return Err(Failure::usage("invalid grid: empty"));
    }
    let mut vary = Vec::new();
    for v in args.vary.split(',') {
        match v.trim().parse::<usize>() {
            Ok(i @ 1..=4) if !vary.contains(&(i - 1)) => vary.push(i - 1),
            _ => return Err(Failure::usage(format!("invalid vary entry {v:?}"))),
        }
    }
    let mut base = args.experiment.config()?;
    if base.circuit_id()? != CircuitId::DoubleBellCnot {
        return Err(Failure::usage("invalid circuit: scan runs double_bell_cnot"));
    }
    if base.variant != Variant::TNl {
        return Err(Failure::usage("invalid variant: scan runs t_nl"));
    }
    let fixed = [base.theta1, base.theta2, base.theta3, base.theta4].map(|t| t.unwrap_or(0.0));
    let out_dir = base.out_dir.take();
    let mut rows = Vec::new();
    let total = grid.len().pow(vary.len() as u32);
    for index in 0..total {
        let mut thetas = fixed;
        let mut rest = index;
        for &slot in vary.iter().rev() {
            thetas[slot] = grid[rest % grid.len()];
            rest /= grid.len();
        }
        let config = ExperimentConfig {
            theta1: Some(thetas[0]),
            theta2: Some(thetas[1]),
            theta3: Some(thetas[2]),
            theta4: Some(thetas[3]),
            seed: base.seed.wrapping_add(index as u64),
            ..base.clone()
        };
        let result = runner::sweep_point(&config.spec()?, &config);
        rows.push(ScanRow { thetas, result });
    }
    let path = csv_sink(args.output, out_dir.as_deref(), "scan.csv");
    write_csv_to(path.as_deref(), out, |w| formats::write_scan_csv(w, &rows))?;
    Ok(EXIT_OK)
}

/// Runs the CLI on `args` (including the program name), writing results to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Compare(a) => compare(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::CheckLemma(a) => check_lemma(a, out),
        Command::Scan(a) => scan(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Entry point of the `retrolab` binary.
pub fn main() -> ExitCode {
    let stdout = io::stdout();
    let code = run(std::env::args_os(), &mut stdout.lock());
    ExitCode::from(code)
}
