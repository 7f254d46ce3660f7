//! Command-line front end: argument and config-file parsing, dispatch to the
//! library, and emission of CSV or JSON files.
//!
//! Every output starts with the resolved configuration: `#` comment lines for
//! CSV, a leading `config` object for JSON. Results are rendered into memory
//! first, so a failed run never leaves a partial file behind.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_grid, trajectory_rows, write_trajectory_csv, GridMode, TrajectoryRow};
use crate::lindblad::{integrate_master, write_lindblad_csv, LindbladParams, LindbladPoint, DEFAULT_DT};
use crate::model::{compensated_omega, QubitParams, SystemParams};
use crate::numerics::c;
use crate::optimizer::{enhancement_factor, EnhancementReport, OptimalSearch, FIRST_PEAK_FLOOR};
use crate::output::fmt_f64;
use crate::perturbation::{perturbative_evolve, perturbed_eigensystem};
use crate::spectra::{
    ep_order, locate_ep, scaling_fit, sweep_eigenvalues, write_sweep_csv, EpLocation, EpOrderReport, ScalingFit,
    SweepAxis, SweepRange, SweepResult, DEFAULT_APPROACH_EPS, DEFAULT_CLUSTER_GAP, DEFAULT_OVERLAP_THRESHOLD,
};
use crate::state::{DensityMatrix, PureState};
use crate::Error;

pub const DEFAULT_GAMMA: f64 = 6.0;
pub const DEFAULT_OMEGA: f64 = 1.6;
pub const DEFAULT_J: f64 = 1e-3;
pub const DEFAULT_T_MAX: f64 = 8.0;
pub const DEFAULT_EVOLVE_DT: f64 = 0.01;
pub const DEFAULT_FIT_J: &str = "1e-6:1e-2:21";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) => CliError::Config(m),
            Error::NotIdenticalResonant => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

/// A flag value: a number, a comma list, or an inclusive `start:end:steps` range.
#[derive(Clone, Debug, PartialEq)]
pub enum ValueSpec {
    Single(f64),
    List(Vec<f64>),
    Range(SweepRange),
}

fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    let x = f64::from_str(t).map_err(|_| format!("'{t}' is not a plain number (units are implicit)"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{t}' is not finite"))
    }
}

impl FromStr for ValueSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("range '{s}' must be start:end:steps"));
            }
            let steps: usize =
                parts[2].trim().parse().map_err(|_| format!("steps '{}' must be a positive integer", parts[2]))?;
            let r = SweepRange::new(parse_number(parts[0])?, parse_number(parts[1])?, steps)
                .map_err(|e| e.to_string())?;
            Ok(ValueSpec::Range(r))
        } else if s.contains(',') || s.is_empty() {
            let v = s.split(',').filter(|p| !p.trim().is_empty()).map(parse_number).collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(ValueSpec::List(v))
        } else {
            Ok(ValueSpec::Single(parse_number(s)?))
        }
    }
}

impl ValueSpec {
    fn scalar(&self, name: &str) -> CliResult<f64> {
        match self {
            ValueSpec::Single(x) => Ok(*x),
            _ => config_err(format!("--{name} takes a single value here")),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            ValueSpec::Single(x) => vec![*x],
            ValueSpec::List(v) => v.clone(),
            ValueSpec::Range(r) => r.points(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Perturbative,
}

/// Initial state: a basis label or `custom:` followed by eight numbers
/// (real and imaginary parts of alpha, beta, zeta, delta).
#[derive(Clone, Debug, PartialEq)]
pub struct SeedState {
    pub label: String,
    pub state: PureState,
}

impl FromStr for SeedState {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let state = match s {
            "ff" => PureState::ff(),
            "fe" => PureState::fe(),
            "ef" => PureState::ef(),
            "ee" => PureState::ee(),
            _ => {
                let body = s.strip_prefix("custom:").ok_or_else(|| format!("unknown seed state '{s}'"))?;
                let x = body.split(',').map(parse_number).collect::<std::result::Result<Vec<_>, _>>()?;
                if x.len() != 8 {
                    return Err(format!("custom state needs 8 numbers, got {}", x.len()));
                }
                PureState::new(c(x[0], x[1]), c(x[2], x[3]), c(x[4], x[5]), c(x[6], x[7]))
                    .normalize()
                    .map_err(|e| e.to_string())?
            }
        };
        Ok(SeedState { label: s.to_string(), state })
    }
}

/// Qubit and coupling flags shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct SystemArgs {
    /// TOML file with keys delta1, gamma1, omega1, delta2, gamma2, omega2, J.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Decay rate of both qubits (1/us).
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub gamma1: Option<f64>,
    #[arg(long, global = true)]
    pub gamma2: Option<f64>,
    /// Drive of both qubits (rad/us); a range where the command sweeps it.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega: Option<ValueSpec>,
    #[arg(long, global = true)]
    pub omega1: Option<f64>,
    #[arg(long, global = true)]
    pub omega2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta2: Option<f64>,
    /// Common detuning of both drives (rad/us).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub detuning: Option<f64>,
    /// Coupling (rad/us); a range or list where the command accepts one.
    #[arg(long = "J", global = true)]
    pub j: Option<ValueSpec>,
    /// Set the drive of qubit 2 so both qubits share the decoupled period.
    #[arg(long, global = true)]
    pub compensate_period: bool,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Parser, Debug)]
#[command(name = "epqubits", version, about = "Driven non-Hermitian qubit pairs near an exceptional point")]
pub struct Cli {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalues and eigenvector overlaps along a drive or coupling sweep.
    Spectrum,
    /// Time evolution of the amplitudes, phases, concurrence and Bloch vector.
    Evolve(EvolveArgs),
    /// Exceptional-point order and eigenvalue scaling with J.
    Epscan(EpscanArgs),
    /// Optimal drive and time per coupling, and the enhancement factor.
    Optimize(OptimizeArgs),
    /// Lindblad evolution with dephasing-free f -> e decay.
    Lindblad(LindbladArgs),
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    pub t_max: f64,
    /// Output spacing (us).
    #[arg(long, default_value_t = DEFAULT_EVOLVE_DT)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    pub method: Method,
    #[arg(long, default_value = "ff")]
    pub seed_state: SeedState,
}

#[derive(Args, Debug)]
pub struct EpscanArgs {
    #[arg(long, default_value_t = DEFAULT_APPROACH_EPS)]
    pub eps: f64,
    #[arg(long, default_value_t = DEFAULT_OVERLAP_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = DEFAULT_CLUSTER_GAP)]
    pub gap: f64,
    /// Log-spaced couplings `start:end:steps` for the scaling fit.
    #[arg(long, default_value = DEFAULT_FIT_J)]
    pub fit_j: ValueSpec,
    #[arg(long)]
    pub no_fit: bool,
    /// Drive window `lo:hi:scan_points` in which to locate a coalescence.
    #[arg(long)]
    pub locate: Option<ValueSpec>,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// Time window `start:end:steps` (us).
    #[arg(long)]
    pub t: Option<ValueSpec>,
    #[arg(long, default_value_t = FIRST_PEAK_FLOOR)]
    pub floor: f64,
}

#[derive(Args, Debug)]
pub struct LindbladArgs {
    /// f -> e decay rate of both qubits (1/us).
    #[arg(long, default_value_t = 0.0)]
    pub gamma_f: f64,
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    pub t_max: f64,
    /// Integrator step (us).
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = 10)]
    pub record_every: usize,
    #[arg(long, default_value = "ff")]
    pub seed_state: SeedState,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub delta1: Option<f64>,
    pub gamma1: Option<f64>,
    pub omega1: Option<f64>,
    pub delta2: Option<f64>,
    pub gamma2: Option<f64>,
    pub omega2: Option<f64>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Resolved physical parameters as recorded in output headers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SystemConfig {
    pub delta1: f64,
    pub gamma1: f64,
    pub omega1: f64,
    pub delta2: f64,
    pub gamma2: f64,
    pub omega2: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub compensate_period: bool,
}

impl SystemConfig {
    pub fn params(&self) -> CliResult<SystemParams> {
        Ok(SystemParams::new(
            QubitParams::new(self.delta1, self.gamma1, self.omega1)?,
            QubitParams::new(self.delta2, self.gamma2, self.omega2)?,
            self.j,
        )?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskConfig {
    Spectrum { axis: String, start: f64, end: f64, steps: usize },
    Evolve { t_max: f64, dt: f64, method: Method, seed_state: String },
    Epscan { omega: f64, eps: f64, threshold: f64, gap: f64, fit_j: Option<Vec<f64>>, locate: Option<SweepRange> },
    Optimize { j_values: Vec<f64>, omega: SweepRange, t: SweepRange, floor: f64 },
    Lindblad { gamma_f: f64, t_max: f64, dt: f64, record_every: usize, seed_state: String },
}

/// Fully resolved run; also the content of every output header.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub format: Format,
    pub system: SystemConfig,
    pub task: TaskConfig,
}

impl RunConfig {
    pub fn csv_header(&self) -> String {
        let body = toml::to_string(self).expect("run config serializes");
        let mut out = String::from("# epqubits resolved configuration\n");
        for line in body.lines().filter(|l| !l.trim().is_empty()) {
            let _ = writeln!(out, "# {line}");
        }
        out
    }
}

fn pick(specific: Option<f64>, common: Option<f64>, file: Option<f64>, default: f64) -> f64 {
    specific.or(common).or(file).unwrap_or(default)
}

/// Merge flags over the config file over defaults. Drive and coupling ranges
/// are left to the subcommand; here they only fall back to defaults.
fn resolve_system(a: &SystemArgs, omega: Option<f64>, j: Option<f64>) -> CliResult<SystemConfig> {
    let file = match &a.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let gamma1 = pick(a.gamma1, a.gamma, file.gamma1, DEFAULT_GAMMA);
    let gamma2 = pick(a.gamma2, a.gamma, file.gamma2, DEFAULT_GAMMA);
    let omega1 = pick(a.omega1, omega, file.omega1, DEFAULT_OMEGA);
    let mut omega2 = pick(a.omega2, omega, file.omega2, DEFAULT_OMEGA);
    if a.compensate_period {
        if a.omega2.is_some() {
            return config_err("--compensate-period sets the drive of qubit 2; drop --omega2");
        }
        omega2 = compensated_omega(gamma1, omega1, gamma2)?;
    }
    let cfg = SystemConfig {
        delta1: pick(a.delta1, a.detuning, file.delta1, 0.0),
        gamma1,
        omega1,
        delta2: pick(a.delta2, a.detuning, file.delta2, 0.0),
        gamma2,
        omega2,
        j: j.or(file.j).unwrap_or(DEFAULT_J),
        compensate_period: a.compensate_period,
    };
    cfg.params()?;
    Ok(cfg)
}

fn scalar_opt(spec: &Option<ValueSpec>, name: &str) -> CliResult<Option<f64>> {
    spec.as_ref().map(|s| s.scalar(name)).transpose()
}

fn time_grid(t_max: f64, dt: f64) -> CliResult<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_max > 0.0 && t_max.is_finite()) {
        return config_err("--t-max and --dt must be positive");
    }
    let n = (t_max / dt).round();
    if ((t_max / dt) - n).abs() > 1e-9 * n.max(1.0) {
        return config_err(format!("--t-max {t_max} is not a multiple of --dt {dt}"));
    }
    Ok((0..=n as usize).map(|k| k as f64 * dt).collect())
}

fn log_points(spec: &ValueSpec) -> CliResult<Vec<f64>> {
    let v = match spec {
        ValueSpec::Range(r) => {
            if !(r.start > 0.0) {
                return config_err("log-spaced range needs a positive start");
            }
            let (a, b) = (r.start.ln(), r.end.ln());
            (0..r.steps).map(|k| (a + (b - a) * k as f64 / (r.steps - 1) as f64).exp()).collect()
        }
        other => other.values(),
    };
    if v.is_empty() || v.iter().any(|x| !(*x > 0.0)) {
        return config_err("coupling values must be a non-empty set of positive numbers");
    }
    Ok(v)
}

/// Resolve every flag into a `RunConfig`; all validation happens here.
pub fn resolve(cli: &Cli) -> CliResult<RunConfig> {
    let a = &cli.system;
    let (system, task) = match &cli.command {
        Command::Spectrum => {
            let (axis, range, omega, j) = match (&a.omega, &a.j) {
                (Some(ValueSpec::Range(r)), j) => {
                    if a.omega1.is_some() || a.omega2.is_some() || a.compensate_period {
                        return config_err("a drive sweep sets both qubits; drop per-qubit drive flags");
                    }
                    (SweepAxis::Omega, *r, Some(r.start), scalar_opt(j, "J")?)
                }
                (o, Some(ValueSpec::Range(r))) => (SweepAxis::Coupling, *r, scalar_opt(o, "omega")?, Some(r.start)),
                _ => return config_err("spectrum needs --omega or --J as a start:end:steps range"),
            };
            if axis == SweepAxis::Coupling && range.start < 0.0 {
                return config_err("coupling range must be non-negative");
            }
            let system = resolve_system(a, omega, j)?;
            let task = TaskConfig::Spectrum {
                axis: axis.name().to_string(),
                start: range.start,
                end: range.end,
                steps: range.steps,
            };
            (system, task)
        }
        Command::Evolve(e) => {
            let system = resolve_system(a, scalar_opt(&a.omega, "omega")?, scalar_opt(&a.j, "J")?)?;
            time_grid(e.t_max, e.dt)?;
            if e.method == Method::Perturbative && !system.params()?.is_identical_resonant() {
                return config_err("the perturbative method needs identical resonant qubits");
            }
            let task = TaskConfig::Evolve {
                t_max: e.t_max,
                dt: e.dt,
                method: e.method,
                seed_state: e.seed_state.label.clone(),
            };
            (system, task)
        }
        Command::Epscan(e) => {
            let system = resolve_system(a, scalar_opt(&a.omega, "omega")?, scalar_opt(&a.j, "J")?)?;
            if a.format != Format::Json {
                return config_err("epscan writes JSON; pass --format json");
            }
            let omega = match scalar_opt(&a.omega, "omega")? {
                Some(w) => w,
                None => a.omega1.unwrap_or(system.gamma1 / 4.0),
            };
            if !(e.eps > 0.0) || !(e.gap > 0.0) || !(e.threshold > 0.0 && e.threshold <= 1.0) {
                return config_err("eps and gap must be > 0 and threshold in (0, 1]");
            }
            let fit_j = if e.no_fit { None } else { Some(log_points(&e.fit_j)?) };
            let locate = match &e.locate {
                None => None,
                Some(ValueSpec::Range(r)) => Some(*r),
                Some(_) => return config_err("--locate takes lo:hi:scan_points"),
            };
            let task = TaskConfig::Epscan { omega, eps: e.eps, threshold: e.threshold, gap: e.gap, fit_j, locate };
            (system, task)
        }
        Command::Optimize(o) => {
            let j_values = match &a.j {
                Some(spec) => spec.values(),
                None => vec![DEFAULT_J],
            };
            if j_values.is_empty() || j_values.iter().any(|j| !(*j > 0.0)) {
                return config_err("optimize needs a non-empty list of positive J values");
            }
            let defaults = OptimalSearch::default();
            let omega = match &a.omega {
                None => defaults.omega,
                Some(ValueSpec::Range(r)) => *r,
                Some(_) => return config_err("optimize takes --omega as a start:end:steps search window"),
            };
            let t = match &o.t {
                None => defaults.t,
                Some(ValueSpec::Range(r)) => *r,
                Some(_) => return config_err("optimize takes --t as a start:end:steps window"),
            };
            if t.start < 0.0 || omega.start < 0.0 {
                return config_err("search windows must be non-negative");
            }
            if a.gamma1.is_some() || a.gamma2.is_some() || a.omega1.is_some() || a.omega2.is_some() {
                return config_err("optimize works on identical qubits; use --gamma");
            }
            let system = resolve_system(a, Some(omega.start), Some(j_values[0]))?;
            if !system.params()?.is_identical_resonant() {
                return config_err("optimize works on identical resonant qubits");
            }
            (system, TaskConfig::Optimize { j_values, omega, t, floor: o.floor })
        }
        Command::Lindblad(l) => {
            let system = resolve_system(a, scalar_opt(&a.omega, "omega")?, scalar_opt(&a.j, "J")?)?;
            let p = LindbladParams {
                system: system.params()?,
                gamma_f1: l.gamma_f,
                gamma_f2: l.gamma_f,
                dt: l.dt,
                t_max: l.t_max,
                record_every: l.record_every,
            };
            p.validate()?;
            let task = TaskConfig::Lindblad {
                gamma_f: l.gamma_f,
                t_max: l.t_max,
                dt: l.dt,
                record_every: l.record_every,
                seed_state: l.seed_state.label.clone(),
            };
            (system, task)
        }
    };
    Ok(RunConfig { command: command_name(&cli.command).to_string(), format: a.format, system, task })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Spectrum => "spectrum",
        Command::Evolve(_) => "evolve",
        Command::Epscan(_) => "epscan",
        Command::Optimize(_) => "optimize",
        Command::Lindblad(_) => "lindblad",
    }
}

fn seed_of(cli: &Cli) -> PureState {
    match &cli.command {
        Command::Evolve(e) => e.seed_state.state,
        Command::Lindblad(l) => l.seed_state.state,
        _ => PureState::ff(),
    }
}

#[derive(Serialize)]
struct JsonDoc<'a, T: Serialize> {
    config: &'a RunConfig,
    result: T,
}

fn json_doc<T: Serialize>(cfg: &RunConfig, result: T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(&JsonDoc { config: cfg, result })
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    s.push('\n');
    Ok(s)
}

fn csv_doc(cfg: &RunConfig, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CliResult<String> {
    let mut buf = cfg.csv_header().into_bytes();
    body(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct EpscanResult {
    ep_order: EpOrderReport,
    scaling_fit: Option<ScalingFit>,
    located: Option<EpLocation>,
}

#[derive(Serialize)]
struct LindbladResult<'a> {
    step_doubling_change: Option<f64>,
    peak_t: f64,
    peak_concurrence: f64,
    points: Vec<LindbladRow<'a>>,
}

#[derive(Serialize)]
struct LindbladRow<'a> {
    t: f64,
    trace: f64,
    concurrence: f64,
    populations: &'a [f64; 4],
}

impl<'a> From<&'a LindbladPoint> for LindbladRow<'a> {
    fn from(p: &'a LindbladPoint) -> Self {
        LindbladRow { t: p.t, trace: p.trace, concurrence: p.concurrence, populations: &p.populations }
    }
}

fn write_enhancement_csv(w: &mut Vec<u8>, r: &EnhancementReport) -> std::io::Result<()> {
    writeln!(w, "J,omega_star,t_star,c_max,t_hermitian,factor,factor_pi_over_j")?;
    for p in &r.points {
        let row = [p.j, p.omega_star, p.t_star, p.c_max, p.t_hermitian, p.factor, p.factor_pi_over_j];
        writeln!(w, "{}", row.map(fmt_f64).join(","))?;
    }
    Ok(())
}

/// Run a resolved configuration and render the output document.
pub fn execute(cfg: &RunConfig, seed: &PureState) -> CliResult<String> {
    let system = cfg.system.params()?;
    match &cfg.task {
        TaskConfig::Spectrum { axis, start, end, steps } => {
            let axis = if axis == "omega" { SweepAxis::Omega } else { SweepAxis::Coupling };
            let r: SweepResult = sweep_eigenvalues(&system, axis, &SweepRange::new(*start, *end, *steps)?)?;
            match cfg.format {
                Format::Csv => csv_doc(cfg, |w| write_sweep_csv(w, &r)),
                Format::Json => json_doc(cfg, &r),
            }
        }
        TaskConfig::Evolve { t_max, dt, method, .. } => {
            let grid = time_grid(*t_max, *dt)?;
            let states = match method {
                Method::Exact => evolve_grid(&system, seed, &grid, GridMode::Independent)?,
                Method::Perturbative => {
                    let q = system.qubit1;
                    let basis = perturbed_eigensystem(q.gamma, q.omega, system.coupling)?;
                    grid.iter()
                        .map(|&t| perturbative_evolve(seed, t, &basis).map(|e| e.raw))
                        .collect::<crate::Result<Vec<_>>>()?
                }
            };
            let rows: Vec<TrajectoryRow> = trajectory_rows(&grid, &states)?;
            match cfg.format {
                Format::Csv => csv_doc(cfg, |w| write_trajectory_csv(w, &rows)),
                Format::Json => json_doc(cfg, &rows),
            }
        }
        TaskConfig::Epscan { omega, eps, threshold, gap, fit_j, locate } => {
            let order = ep_order(&system, *omega, *eps, *threshold, *gap)?;
            let fit = fit_j.as_ref().map(|j| scaling_fit(&system.with_omega(*omega), j)).transpose()?;
            let located = locate.map(|r| locate_ep(&system, r.start, r.end, r.steps)).transpose()?;
            json_doc(cfg, EpscanResult { ep_order: order, scaling_fit: fit, located })
        }
        TaskConfig::Optimize { j_values, omega, t, floor } => {
            let search = OptimalSearch { omega: *omega, t: *t, floor: *floor };
            let report = enhancement_factor(system.qubit1.gamma, j_values, &search)?;
            match cfg.format {
                Format::Csv => csv_doc(cfg, |w| write_enhancement_csv(w, &report)),
                Format::Json => json_doc(cfg, &report),
            }
        }
        TaskConfig::Lindblad { gamma_f, t_max, dt, record_every, .. } => {
            let p = LindbladParams {
                system,
                gamma_f1: *gamma_f,
                gamma_f2: *gamma_f,
                dt: *dt,
                t_max: *t_max,
                record_every: *record_every,
            };
            let trace = integrate_master(&DensityMatrix::from_pure(seed), &p)?;
            match cfg.format {
                Format::Csv => csv_doc(cfg, |w| write_lindblad_csv(w, &trace)),
                Format::Json => {
                    let (peak_t, peak_concurrence) = trace.peak();
                    json_doc(
                        cfg,
                        LindbladResult {
                            step_doubling_change: trace.step_doubling_change,
                            peak_t,
                            peak_concurrence,
                            points: trace.points.iter().map(LindbladRow::from).collect(),
                        },
                    )
                }
            }
        }
    }
}

fn emit(out: &Option<PathBuf>, doc: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, doc)?,
        None => std::io::stdout().lock().write_all(doc.as_bytes())?,
    }
    Ok(())
}

/// Parse, resolve, execute and write; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = resolve(&cli).and_then(|cfg| execute(&cfg, &seed_of(&cli))).and_then(|doc| emit(&cli.system.out, &doc));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("epqubits: {e}");
            e.exit_code()
        }
    }
}
