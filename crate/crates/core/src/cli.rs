//! Command-line front end.
//!
//! `run` never exits the process itself; it returns the exit code so that
//! it can be driven from tests. Codes: 0 success, 1 validation or usage
//! error, 2 I/O error.

use crate::constructions::{edf_ifs, quantile_estimator, quantile_ifs};
use crate::distfn::{
    read_sample, uniform_points, DistributionFunction, GridDF, Interpolation, Uniform,
};
use crate::ifs::{AffineMap, IfsSystem};
use crate::inverse::{CollageProblem, EvaluationMode, DEFAULT_GRID_MODE_SIZE};
use crate::randstats::{BetaCdf, BetaParams};
use crate::sim::{
    auto_k, run_table, TrialConfig, DEFAULT_EVAL_POINTS, DEFAULT_ITERATIONS, DEFAULT_TRIALS,
};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

const DEFAULT_MESH: usize = 101;
const SOLVER_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "ifsdist",
    version,
    about = "Iterated function systems on distribution functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Approximate a Beta CDF by the quantile IFS and dump T^s u as x,value CSV.
    #[command(args_override_self = true)]
    Approximate(ApproximateArgs),
    /// Build the exact IFS of a sample's e.d.f. and dump it as JSON.
    #[command(name = "edf-ifs", args_override_self = true)]
    EdfIfs(EdfIfsArgs),
    /// Solve the collage inverse problem for a target and write a JSON report.
    #[command(args_override_self = true)]
    Invert(InvertArgs),
    /// Iterate the empirical-quantile estimator of a sample, as x,value CSV.
    #[command(args_override_self = true)]
    Estimate(EstimateArgs),
    /// Compare the estimator with the e.d.f. over repeated Beta samples.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct ApproximateArgs {
    /// Target distribution, `beta:A,B` or `uniform`.
    #[arg(long)]
    dist: BetaParams,
    /// Number of interior quantile points.
    #[arg(long)]
    points: usize,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iters: usize,
    /// Equally spaced output points (the quantile abscissae are always added).
    #[arg(long, default_value_t = DEFAULT_MESH)]
    mesh: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EdfIfsArgs {
    /// Sample file, one value in (0,1) per line.
    #[arg(long)]
    sample: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Grid,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InterpArg {
    Step,
    Linear,
}

#[derive(Debug, Args)]
struct InvertArgs {
    /// A distribution spec (`beta:A,B`, `uniform`) or an x,value CSV file.
    #[arg(long)]
    target: String,
    /// `auto:N` for N equally spaced cut points, a file of cut points, or an
    /// IFS JSON file whose maps and offsets are reused.
    #[arg(long)]
    partition: String,
    /// Offsets: comma-separated list or file. Default zero, or the offsets of
    /// an IFS JSON partition.
    #[arg(long)]
    delta: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Points for `--mode grid`.
    #[arg(long, default_value_t = DEFAULT_GRID_MODE_SIZE)]
    grid_size: usize,
    /// Interpolation of a CSV target.
    #[arg(long, value_enum, default_value_t = InterpArg::Step)]
    interp: InterpArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    sample: PathBuf,
    /// Number of empirical quantiles, 2 <= k < n.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iters: usize,
    #[arg(long, default_value_t = DEFAULT_MESH)]
    mesh: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Target distribution; repeat for several blocks.
    #[arg(long, required = true)]
    dist: Vec<BetaParams>,
    /// Sample sizes, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Quantile count or `auto` (ceil(n/2), capped at n-1).
    #[arg(long, default_value = "auto")]
    k: KArg,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Master seed; falls back to IFS_SEED, then 0.
    #[arg(long, env = "IFS_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_EVAL_POINTS)]
    eval_points: usize,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iters: usize,
    /// Worker threads; 0 uses the rayon default.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Measure distances including breakpoints, not only the evaluation points.
    #[arg(long)]
    exact_sup: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug)]
enum KArg {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for KArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(KArg::Auto);
        }
        s.parse()
            .map(KArg::Fixed)
            .map_err(|_| format!("expected an integer or `auto`, got `{s}`"))
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => return report(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    // A closed downstream pipe (`| head`) is not a failure.
    let io_kind = match e {
        Error::Io(io) => Some(io.kind()),
        Error::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => Some(io.kind()),
            _ => None,
        },
        Error::Json(j) => j.io_error_kind(),
        _ => None,
    };
    if io_kind == Some(io::ErrorKind::BrokenPipe) {
        return 0;
    }
    eprintln!("error: {e}");
    if e.is_io() {
        2
    } else {
        1
    }
}

/// Replaces `--config FILE` by the `--key value` pairs it contains, placed
/// right after the subcommand so that explicit flags take precedence.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            let path = it
                .next()
                .ok_or_else(|| Error::InvalidArgument("--config needs a file".into()))?;
            config = Some(PathBuf::from(path));
        } else if let Some(path) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)?;
    let mut extra = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("{}:{}: expected key=value", path.display(), i + 1))
        })?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        match value {
            "true" => extra.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => {
                extra.push(OsString::from(format!("--{key}")));
                extra.push(OsString::from(value));
            }
        }
    }
    // The subcommand is the first token after the program name that is not a flag.
    let at = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map_or(rest.len(), |p| p + 2);
    rest.splice(at..at, extra);
    Ok(rest)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Approximate(a) => approximate(a),
        Command::EdfIfs(a) => edf(a),
        Command::Invert(a) => invert(a),
        Command::Estimate(a) => estimate(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: &Option<PathBuf>) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_sample_file(path: &Path) -> Result<Vec<f64>> {
    read_sample(File::open(path)?)
}

fn check_mesh(mesh: usize) -> Result<Vec<f64>> {
    if mesh < 2 {
        return Err(Error::InvalidArgument("--mesh must be at least 2".into()));
    }
    Ok(uniform_points(mesh))
}

fn dump_iterate(
    system: &IfsSystem,
    iters: usize,
    mesh: usize,
    out: &Option<PathBuf>,
) -> Result<()> {
    let mesh = check_mesh(mesh)?;
    let g = system.iterate(&Uniform, iters, &mesh)?;
    let mut w = output(out)?;
    g.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn approximate(a: ApproximateArgs) -> Result<()> {
    let system = quantile_ifs(&BetaCdf::new(a.dist), a.points)?;
    dump_iterate(&system, a.iters, a.mesh, &a.out)
}

fn edf(a: EdfIfsArgs) -> Result<()> {
    let system = edf_ifs(&read_sample_file(&a.sample)?)?;
    write_json(&system, &a.out)
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let system = quantile_estimator(&read_sample_file(&a.sample)?, a.k)?;
    dump_iterate(&system, a.iters, a.mesh, &a.out)
}

fn parse_reals(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::Parse(format!("`{t}`: {e}")))
        })
        .collect()
}

/// A list given inline or as a path to a file of reals.
fn reals_arg(arg: &str) -> Result<Vec<f64>> {
    if Path::new(arg).is_file() {
        read_sample_file(Path::new(arg))
    } else {
        parse_reals(arg)
    }
}

fn load_target(spec: &str, interp: InterpArg) -> Result<Box<dyn DistributionFunction>> {
    if let Ok(params) = spec.parse::<BetaParams>() {
        return Ok(Box::new(BetaCdf::new(params)));
    }
    let mode = match interp {
        InterpArg::Step => Interpolation::Step,
        InterpArg::Linear => Interpolation::Linear,
    };
    Ok(Box::new(GridDF::read_csv(File::open(spec)?, mode)?))
}

/// Maps and default offsets for `--partition`.
fn load_partition(spec: &str) -> Result<(Vec<AffineMap>, Option<Vec<f64>>)> {
    if let Some(n) = spec.strip_prefix("auto:") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::Parse(format!("bad partition `{spec}`, expected auto:N")))?;
        let points: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        return Ok((IfsSystem::identity_maps(&points), None));
    }
    let text = std::fs::read_to_string(spec)?;
    if text.trim_start().starts_with('{') {
        let system: IfsSystem = serde_json::from_str(&text)?;
        return Ok((system.maps().to_vec(), Some(system.offsets().to_vec())));
    }
    let mut points = parse_reals(
        &text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n"),
    )?;
    points.retain(|&x| x > 0.0 && x < 1.0);
    Ok((IfsSystem::identity_maps(&points), None))
}

fn invert(a: InvertArgs) -> Result<()> {
    let target = load_target(&a.target, a.interp)?;
    let (maps, partition_delta) = load_partition(&a.partition)?;
    let delta = match (&a.delta, partition_delta) {
        (Some(d), _) => reals_arg(d)?,
        (None, Some(d)) => d,
        (None, None) => vec![0.0; maps.len().saturating_sub(1)],
    };
    let mode = match a.mode {
        ModeArg::Exact => EvaluationMode::ExactEndpoints,
        ModeArg::Grid => EvaluationMode::Grid { size: a.grid_size },
    };
    let problem = CollageProblem::new(target, maps, delta, mode)?;
    let solution = problem.solve_inverse(SOLVER_TOL)?;
    write_json(&solution.report(), &a.out)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut configs = Vec::with_capacity(a.dist.len() * a.n.len());
    for &dist in &a.dist {
        for &n in &a.n {
            let mut c = TrialConfig::new(dist, n, a.seed);
            c.k = match a.k {
                KArg::Auto => auto_k(n),
                KArg::Fixed(k) => k,
            };
            c.trials = a.trials;
            c.iterations = a.iters;
            c.eval_points = a.eval_points;
            c.exact_sup = a.exact_sup;
            c.validate()?;
            configs.push(c);
        }
    }
    let table = if a.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(a.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| run_table(&configs))?
    } else {
        run_table(&configs)?
    };
    let mut w = output(&a.out)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}
