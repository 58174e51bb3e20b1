//! Batch front-end behind the `chernoff` binary.
//!
//! Every subcommand maps onto a [`RunConfig`], which can also be loaded from a
//! JSON file with `--config`. Tables go to stdout unless `--out` is given, in
//! which case a JSON sidecar with run metadata is written next to them.
//! Relative output paths are resolved against `$CHERNOFF_OUT_DIR` when set.
//!
//! Exit codes: 0 on success, 2 for usage or validation errors, 1 when a
//! numerical invariant fails during the run.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::clt::{self, GridSpec, NamedLaw};
use crate::engine::{
    convergence_sweep, lemma4_csv, lemma4_trials, make_affine_family, make_implicit_euler_family,
    make_semigroup_family, make_trotter_family, ConvergenceReport, GeneratorSpec, LEMMA4_SLACK,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{parse_matrix_json, ComplexMatrix};
use crate::partitions::{metrics, PartitionScheme, DEFAULT_SEED, RNG_ALGORITHM};
use crate::quantum::{self, ChannelVariant, DensityMatrix, MeasurementChannel};

pub const OUT_DIR_ENV: &str = "CHERNOFF_OUT_DIR";

/// Largest tolerated trace drift in emitted quantum rows.
pub const TRACE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Partition,
    Converge,
    Trotter,
    Quantum,
    Clt,
    Lemma4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    ImplicitEuler,
    Exact,
    Affine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Closed,
    Quadrature,
}

/// An operator given inline as JSON or as a path to a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixSource(pub String);

impl MatrixSource {
    pub fn load(&self) -> Result<ComplexMatrix> {
        let text = self.0.trim();
        let json = if text.starts_with('[') || text.starts_with('{') {
            text.to_string()
        } else {
            std::fs::read_to_string(text).map_err(|e| {
                Error::InvalidArgument(format!("cannot read matrix file {text:?}: {e}"))
            })?
        };
        parse_matrix_json(&json.replace('\u{2212}', "-"))
    }
}

/// A complete description of one batch run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default = "default_scheme")]
    pub scheme: PartitionScheme,
    #[serde(default = "default_t")]
    pub t: f64,
    /// Row size for `partition`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Sweep sizes; each command has its own default.
    #[serde(default)]
    pub ns: Vec<usize>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    /// Seed of the randomized `lemma4` trials.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub family: Option<FamilyKind>,
    #[serde(default)]
    pub matrix: Option<MatrixSource>,
    #[serde(default)]
    pub matrix2: Option<MatrixSource>,
    #[serde(default)]
    pub observable: Option<MatrixSource>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub variant: Option<VariantKind>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub law: Option<NamedLaw>,
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default)]
    pub density_path: Option<PathBuf>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

fn default_scheme() -> PartitionScheme {
    PartitionScheme::Uniform
}
fn default_t() -> f64 {
    1.0
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_gamma() -> f64 {
    1.0
}
fn default_nodes() -> usize {
    21
}
fn default_dx() -> f64 {
    clt::DEFAULT_DX
}
fn default_trials() -> usize {
    100
}
fn default_max_dim() -> usize {
    8
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            scheme: default_scheme(),
            t: default_t(),
            n: None,
            ns: Vec::new(),
            output_path: None,
            seed: default_seed(),
            family: None,
            matrix: None,
            matrix2: None,
            observable: None,
            gamma: default_gamma(),
            variant: None,
            nodes: default_nodes(),
            law: None,
            dx: default_dx(),
            density_path: None,
            trials: default_trials(),
            max_dim: default_max_dim(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("bad config {}: {e}", path.display())))
    }

    fn sweep_sizes(&self) -> Result<Vec<usize>> {
        let ns = if self.ns.is_empty() {
            match self.command {
                CommandKind::Converge => vec![10, 100, 1000],
                CommandKind::Trotter => vec![16, 64, 256, 1024],
                _ => vec![4, 16, 64, 256],
            }
        } else {
            self.ns.clone()
        };
        if ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("ns must be positive and strictly ascending");
        }
        Ok(ns)
    }

    fn check_t(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t > 0.0) {
            return invalid(format!("t must be positive, got {}", self.t));
        }
        Ok(())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "chernoff",
    version,
    about = "Chernoff products over non-uniform partitions: sweeps and artifacts"
)]
struct Cli {
    /// Load a JSON RunConfig instead of using a subcommand.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print one partition row and its metrics.
    Partition {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence sweep of a resolvent, exact or affine family.
    Converge {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, value_enum, default_value = "implicit-euler")]
        family: FamilyKind,
        /// Generator as JSON (`[[-1]]` or `{"rows",...}`) or a JSON file.
        #[arg(long)]
        matrix: String,
    },
    /// Lie–Trotter splitting `e^{tA1} e^{tA2}` against `e^{t(A1+A2)}`.
    Trotter {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long)]
        matrix2: Option<String>,
    },
    /// Repeated unsharp measurement channel against its Lindblad semigroup.
    Quantum {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Hermitian observable; defaults to σ_z.
        #[arg(long)]
        observable: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, value_enum, default_value = "closed")]
        variant: VariantKind,
        #[arg(long, default_value_t = 21)]
        nodes: usize,
    },
    /// Weighted central limit theorem on a density grid.
    Clt {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value = "uniform")]
        law: String,
        #[arg(long, default_value_t = clt::DEFAULT_DX)]
        dx: f64,
        /// Also write the density of ζ_n at the largest n as `x,p` CSV.
        #[arg(long)]
        density_out: Option<PathBuf>,
    },
    /// Randomized checks of the telescoping estimate for implicit Euler.
    Lemma4 {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 8)]
        max_dim: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SchemeArgs {
    /// uniform, alternating, power_law or dirichlet.
    #[arg(long, default_value = "uniform")]
    scheme: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    concentration: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
}

impl SchemeArgs {
    fn build(&self) -> Result<PartitionScheme> {
        match self.scheme.as_str() {
            "uniform" => Ok(PartitionScheme::Uniform),
            "alternating" => Ok(PartitionScheme::Alternating),
            "power_law" | "power-law" => Ok(PartitionScheme::PowerLaw {
                theta: self
                    .theta
                    .ok_or_else(|| Error::InvalidArgument("power_law needs --theta".into()))?,
            }),
            "dirichlet" | "dirichlet_random" => Ok(PartitionScheme::Dirichlet {
                seed: self.seed,
                concentration: self.concentration.ok_or_else(|| {
                    Error::InvalidArgument("dirichlet needs --concentration".into())
                })?,
            }),
            other => invalid(format!("unknown scheme {other:?}")),
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Comma-separated, strictly ascending.
    #[arg(long, value_delimiter = ',')]
    ns: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        cfg.scheme = self.scheme.build()?;
        cfg.seed = self.scheme.seed;
        cfg.t = self.t;
        cfg.ns = self.ns.clone();
        cfg.output_path = self.out.clone();
        Ok(())
    }
}

impl Command {
    fn into_config(self) -> Result<RunConfig> {
        Ok(match self {
            Command::Partition { scheme, n, out } => {
                let mut c = RunConfig::new(CommandKind::Partition);
                c.scheme = scheme.build()?;
                c.seed = scheme.seed;
                c.n = Some(n);
                c.output_path = out;
                c
            }
            Command::Converge {
                sweep,
                family,
                matrix,
            } => {
                let mut c = RunConfig::new(CommandKind::Converge);
                sweep.apply(&mut c)?;
                c.family = Some(family);
                c.matrix = Some(MatrixSource(matrix));
                c
            }
            Command::Trotter {
                sweep,
                matrix,
                matrix2,
            } => {
                let mut c = RunConfig::new(CommandKind::Trotter);
                sweep.apply(&mut c)?;
                c.matrix = matrix.map(MatrixSource);
                c.matrix2 = matrix2.map(MatrixSource);
                c
            }
            Command::Quantum {
                sweep,
                observable,
                gamma,
                variant,
                nodes,
            } => {
                let mut c = RunConfig::new(CommandKind::Quantum);
                sweep.apply(&mut c)?;
                c.observable = observable.map(MatrixSource);
                c.gamma = gamma;
                c.variant = Some(variant);
                c.nodes = nodes;
                c
            }
            Command::Clt {
                sweep,
                law,
                dx,
                density_out,
            } => {
                let mut c = RunConfig::new(CommandKind::Clt);
                sweep.apply(&mut c)?;
                c.law = Some(NamedLaw::parse(&law)?);
                c.dx = dx;
                c.density_path = density_out;
                c
            }
            Command::Lemma4 {
                trials,
                max_dim,
                seed,
                out,
            } => {
                let mut c = RunConfig::new(CommandKind::Lemma4);
                c.trials = trials;
                c.max_dim = max_dim;
                c.seed = seed;
                c.output_path = out;
                c
            }
        })
    }
}

/// Parses arguments (including the program name) and runs; returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let config = match (cli.config, cli.command) {
        (Some(path), None) => RunConfig::from_json_file(&path),
        (None, Some(cmd)) => cmd.into_config(),
        (Some(_), Some(_)) => invalid("give either --config or a subcommand, not both"),
        (None, None) => invalid("missing subcommand; see --help"),
    };
    match config {
        Ok(cfg) => run(&cfg, stdout, stderr),
        Err(e) => report(&e, stderr),
    }
}

/// Executes a configuration and maps the outcome to an exit code.
pub fn run(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(config, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => report(&e, stderr),
    }
}

fn report(e: &Error, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "error: {e}");
    exit_code(e)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => 1,
        Error::InvalidArgument(_) | Error::Io(_) | Error::Json(_) => 2,
    }
}

/// Resolves a relative output path against `$CHERNOFF_OUT_DIR`.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    PathBuf::from(s)
}

fn emit(
    cfg: &RunConfig,
    body: &str,
    sidecar: serde_json::Value,
    stdout: &mut dyn Write,
) -> Result<()> {
    match &cfg.output_path {
        None => stdout.write_all(body.as_bytes())?,
        Some(p) => {
            let path = resolve_output(p);
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, body)?;
            let mut text = serde_json::to_string_pretty(&sidecar)?;
            text.push('\n');
            std::fs::write(sidecar_path(&path), text)?;
        }
    }
    Ok(())
}

fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}

fn execute(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cfg.command {
        CommandKind::Partition => run_partition(cfg, stdout),
        CommandKind::Converge | CommandKind::Trotter => run_converge(cfg, stdout, stderr),
        CommandKind::Quantum => run_quantum(cfg, stdout, stderr),
        CommandKind::Clt => run_clt(cfg, stdout, stderr),
        CommandKind::Lemma4 => run_lemma4(cfg, stdout, stderr),
    }
}

fn run_partition(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let n = cfg
        .n
        .ok_or_else(|| Error::InvalidArgument("partition needs n".into()))?;
    let p = cfg.scheme.generate(n)?;
    let m = metrics(&p);
    let body = format!(
        "{}\n{}\n",
        serde_json::to_string(&p)?,
        serde_json::to_string(&m)?
    );
    let mut side =
        serde_json::json!({ "command": "partition", "scheme": cfg.scheme.label(), "n": n });
    if cfg.scheme.is_random() {
        side["rng"] = RNG_ALGORITHM.into();
    }
    emit(cfg, &body, side, stdout)
}

fn check_report(r: &ConvergenceReport) -> Result<()> {
    if let Some(row) = r
        .rows
        .iter()
        .find(|r| !(r.error.is_finite() && r.error >= 0.0))
    {
        return Err(numerical(format!("non-finite error at n = {}", row.n)));
    }
    Ok(())
}

fn trotter_default_pair() -> (ComplexMatrix, ComplexMatrix) {
    let a1 = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).expect("2x2");
    let a2 = ComplexMatrix::diag_real(&[-1.0, 0.0]);
    (a1, a2)
}

fn run_converge(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    cfg.check_t()?;
    let ns = cfg.sweep_sizes()?;
    let (fam, gen) = match cfg.command {
        CommandKind::Trotter => {
            let (d1, d2) = trotter_default_pair();
            let a1 = cfg.matrix.as_ref().map_or(Ok(d1), MatrixSource::load)?;
            let a2 = cfg.matrix2.as_ref().map_or(Ok(d2), MatrixSource::load)?;
            let gen = GeneratorSpec::new(&a1 + &a2)?;
            (make_trotter_family(&a1, &a2)?, gen)
        }
        _ => {
            let a = cfg
                .matrix
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("converge needs a matrix".into()))?
                .load()?;
            let gen = GeneratorSpec::new(a.clone())?;
            let fam = match cfg.family.unwrap_or(FamilyKind::ImplicitEuler) {
                FamilyKind::ImplicitEuler => make_implicit_euler_family(&a)?,
                FamilyKind::Exact => make_semigroup_family(&gen)?,
                FamilyKind::Affine => make_affine_family(&a)?,
            };
            (fam, gen)
        }
    };
    let x = ComplexMatrix::basis_column(gen.dim(), 0);
    let report = convergence_sweep(&fam, &gen, &cfg.scheme, cfg.t, &ns, &x)?;
    check_report(&report)?;
    writeln!(
        stderr,
        "{} / {}: fitted order {:.4}",
        report.family,
        report.scheme.label(),
        report.fitted_order
    )?;
    emit(cfg, &report.to_csv(), report.sidecar(), stdout)
}

fn run_quantum(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    cfg.check_t()?;
    let ns = cfg.sweep_sizes()?;
    let l = cfg
        .observable
        .as_ref()
        .map_or_else(|| Ok(quantum::sigma_z()), MatrixSource::load)?;
    let ch = MeasurementChannel::new(l, cfg.gamma)?;
    let variant = match cfg.variant.unwrap_or(VariantKind::Closed) {
        VariantKind::Closed => ChannelVariant::Closed,
        VariantKind::Quadrature => ChannelVariant::Quadrature { nodes: cfg.nodes },
    };
    let rho = DensityMatrix::uniform_superposition(ch.dim())?;
    let report = quantum::quantum_sweep(&ch, variant, &cfg.scheme, cfg.t, &ns, &rho)?;
    for r in &report.rows {
        if !r.error.is_finite() || r.trace_error > TRACE_TOL {
            return Err(numerical(format!(
                "n = {}: error {} with trace drift {}",
                r.n, r.error, r.trace_error
            )));
        }
    }
    writeln!(
        stderr,
        "{} / {}: fitted order {:.4}",
        report.family,
        report.scheme.label(),
        report.fitted_order
    )?;
    let mut side = report.sidecar();
    side["gamma"] = cfg.gamma.into();
    emit(cfg, &report.to_csv(), side, stdout)
}

fn run_clt(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    cfg.check_t()?;
    let ns = cfg.sweep_sizes()?;
    let law = cfg.law.unwrap_or(NamedLaw::UniformPmSqrt3);
    let grid = GridSpec::symmetric(-clt::DEFAULT_X0, cfg.dx)?;
    let report = clt::clt_sweep(law, &cfg.scheme, cfg.t, &ns, grid)?;
    for r in &report.rows {
        if !(r.ks_distance.is_finite() && (0.0..=1.0).contains(&r.ks_distance))
            || !r.sup_error.is_finite()
        {
            return Err(numerical(format!("invalid CLT row at n = {}", r.n)));
        }
    }
    if report.leakage_warning() {
        writeln!(
            stderr,
            "warning: up to {:.3e} of the mass left the grid during convolution",
            report.max_leakage
        )?;
    }
    let mut side = serde_json::json!({
        "law": law.name(),
        "scheme": cfg.scheme.label(),
        "t": cfg.t,
        "dx": grid.dx,
        "x0": grid.x0,
        "max_leakage": report.max_leakage,
        "leakage_warning": report.leakage_warning(),
    });
    if cfg.scheme.is_random() {
        side["rng"] = RNG_ALGORITHM.into();
    }
    if let Some(p) = &cfg.density_path {
        let path = resolve_output(p);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, report.final_density.to_csv())?;
    }
    emit(cfg, &report.to_csv(), side, stdout)
}

fn run_lemma4(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let trials = lemma4_trials(cfg.trials, cfg.max_dim, cfg.seed)?;
    let failed = trials
        .iter()
        .filter(|r| !r.chain.holds(LEMMA4_SLACK))
        .count();
    writeln!(
        stderr,
        "{} of {} chains hold",
        trials.len() - failed,
        trials.len()
    )?;
    if failed > 0 {
        return Err(numerical(format!(
            "{failed} chains violate lhs <= mid <= rhs"
        )));
    }
    let side = serde_json::json!({
        "trials": cfg.trials,
        "max_dim": cfg.max_dim,
        "seed": cfg.seed,
        "slack": LEMMA4_SLACK,
        "rng": RNG_ALGORITHM,
    });
    emit(cfg, &lemma4_csv(&trials), side, stdout)
}
