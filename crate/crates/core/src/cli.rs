//! The `tbsteer` command line.
//!
//! Exit codes: 0 success (or a passed steering test), 1 usage or
//! configuration error, 2 solver failure, 3 failed steering test.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhs::{
    bound_curve_with, critical_epsilon_with, critical_p_with, lossless_lhs_bound, write_bound_csv, write_bound_json,
    BoundPoint, LhsOptions, LossModel, StrategyMethod,
};
use crate::measurements::{phase_encoding_set, MeasurementSet, SetFamily};
use crate::sim::{
    calibrate_phase, estimate_klyshko, estimate_steering, simulate_run, verdict_with, Calibration, ExperimentConfig,
    KlyshkoEstimate, TestVerdict, VerdictOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_TEST_FAILED: i32 = 3;

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "TBSTEER_THREADS";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "tbsteer", version, about = "Loss-tolerant steering bounds and time-bin experiment simulation")]
struct Cli {
    /// Worker threads for parameter sweeps (0 = one per core).
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical entangled fraction p* over a grid of efficiencies.
    Bounds(BoundsArgs),
    /// Phase-encoding versus Platonic-solid settings.
    Compare(CompareArgs),
    /// Lossless deterministic bound on the steering parameter.
    LhsBound(LhsBoundArgs),
    /// Simulate an acquisition, estimate S_n and efficiency, and decide.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FamilyArg {
    Phase,
    Platonic,
    Custom,
}

impl From<FamilyArg> for SetFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Phase => SetFamily::PhaseEncoding,
            FamilyArg::Platonic => SetFamily::Platonic,
            FamilyArg::Custom => SetFamily::Custom,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum LossModelArg {
    PerSetting,
    Average,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    Auto,
    Full,
    RowGeneration,
}

#[derive(Args, Debug, Serialize)]
struct SolverArgs {
    /// Solver tolerance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Conclusive-probability constraint: one per setting, or only their mean.
    #[arg(long, value_enum, default_value = "per-setting")]
    loss_model: LossModelArg,
    /// Strategy handling: full enumeration, row generation, or automatic.
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
}

impl SolverArgs {
    fn options(&self) -> Result<LhsOptions> {
        if !(self.tol > 0.0 && self.tol < 1e-2) {
            return Err(Error::InvalidArgument(format!("--tol must lie in (0, 1e-2), got {}", self.tol)));
        }
        let mut o = LhsOptions::with_tol(self.tol);
        o.loss_model = match self.loss_model {
            LossModelArg::PerSetting => LossModel::PerSetting,
            LossModelArg::Average => LossModel::AverageOverSettings,
        };
        o.method = match self.method {
            MethodArg::Auto => StrategyMethod::Auto,
            MethodArg::Full => StrategyMethod::Full,
            MethodArg::RowGeneration => StrategyMethod::RowGeneration,
        };
        Ok(o)
    }
}

#[derive(Args, Debug, Serialize)]
struct BoundsArgs {
    /// Number of settings: `6`, a range `6-9`, or a list `2,3`.
    #[arg(long)]
    n: String,
    #[arg(long, value_enum, default_value = "phase")]
    family: FamilyArg,
    /// Efficiency grid `start:stop:step`: starts at `start`, steps by `step`,
    /// never exceeds `stop`.
    #[arg(long)]
    eps: String,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output prefix; writes PREFIX.csv, PREFIX.json and PREFIX.manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CompareArgs {
    #[arg(long)]
    n: usize,
    /// Grid of entangled fractions `start:stop:step`; reports critical efficiencies.
    #[arg(long, conflicts_with = "eps", required_unless_present = "eps")]
    p: Option<String>,
    /// Grid of efficiencies `start:stop:step`; reports critical fractions.
    #[arg(long)]
    eps: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output prefix; writes PREFIX.csv and PREFIX.manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct LhsBoundArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "phase")]
    family: FamilyArg,
    /// Measurement-set JSON, required for the custom family.
    #[arg(long)]
    settings: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    /// Experiment configuration JSON; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Calibrate phase and schedule on the simulator before the run.
    #[arg(long)]
    calibrate: bool,
    /// Evaluate p* at the lower one-sigma edge of the efficiency estimate.
    #[arg(long)]
    conservative: bool,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output prefix; writes PREFIX.verdict.json, PREFIX.histograms.csv,
    /// PREFIX.histograms.json and PREFIX.manifest.json.
    #[arg(long)]
    out: PathBuf,
}

/// Provenance record written next to every output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub version: String,
    pub seed: Option<u64>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

/// Everything `simulate` learns from one run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationReport {
    pub manifest: String,
    pub config: ExperimentConfig,
    pub calibration: Option<Calibration>,
    pub klyshko: KlyshkoEstimate,
    pub verdict: TestVerdict,
}

fn sibling(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

struct ManifestWriter {
    command: &'static str,
    started: String,
    path: PathBuf,
}

impl ManifestWriter {
    fn new(command: &'static str, prefix: &Path) -> Self {
        ManifestWriter { command, started: Utc::now().to_rfc3339(), path: sibling(prefix, ".manifest.json") }
    }

    fn name(&self) -> String {
        self.path.display().to_string()
    }

    fn finish(self, config: serde_json::Value, seed: Option<u64>, outputs: &[PathBuf]) -> Result<()> {
        let m = RunManifest {
            command: self.command.to_owned(),
            config,
            version: VERSION.to_owned(),
            seed,
            started: self.started,
            finished: Utc::now().to_rfc3339(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        let mut w = create(&self.path)?;
        serde_json::to_writer_pretty(&mut w, &m)?;
        w.flush()?;
        Ok(())
    }
}

/// Parses `start:stop:step`. Values start at `start` and never exceed
/// `stop`; they are rounded to 12 decimals so that decimal grids print
/// cleanly.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("grid `{spec}` is not start:stop:step"));
    let parts: Vec<f64> = spec.split(':').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidArgument(format!("grid `{spec}` needs finite bounds and a positive step")));
    }
    if start > stop {
        return Err(Error::InvalidArgument(format!("grid `{spec}` is empty: start exceeds stop")));
    }
    let slack = 1e-9 * stop.abs().max(1.0);
    let count = ((stop - start + slack) / step).floor() as usize + 1;
    if count > 100_000 {
        return Err(Error::InvalidArgument(format!("grid `{spec}` has more than 100000 points")));
    }
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// Parses `6`, `6-9` or `2,3,6`.
pub fn parse_n_list(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("`{spec}` is not a setting count, range a-b, or list"));
    let mut out = Vec::new();
    for part in spec.split(',') {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.trim().parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SolverFailure { .. } | Error::VerdictUnavailable(_) => EXIT_SOLVER,
        _ => EXIT_USAGE,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    if cli.threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let result = match &cli.command {
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::LhsBound(a) => cmd_lhs_bound(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn family_set(family: FamilyArg, n: usize) -> Result<MeasurementSet> {
    match family {
        FamilyArg::Custom => Err(Error::InvalidArgument("the custom family needs --settings".into())),
        f => MeasurementSet::for_family(f.into(), n),
    }
}

fn cmd_bounds(a: &BoundsArgs, out: &mut dyn Write) -> Result<i32> {
    let manifest = ManifestWriter::new("bounds", &a.out);
    let ns = parse_n_list(&a.n)?;
    let grid = parse_grid(&a.eps)?;
    if grid.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::InvalidArgument(format!("efficiency grid `{}` leaves (0, 1]", a.eps)));
    }
    let options = a.solver.options()?;
    let sets = ns.iter().map(|&n| family_set(a.family, n)).collect::<Result<Vec<_>>>()?;
    let mut points: Vec<BoundPoint> = Vec::new();
    for set in &sets {
        points.extend(bound_curve_with(set, &grid, &options)?);
    }
    let csv_path = sibling(&a.out, ".csv");
    let json_path = sibling(&a.out, ".json");
    write_bound_csv(create(&csv_path)?, &points)?;
    let mut w = create(&json_path)?;
    write_bound_json(&mut w, &points, Some(&manifest.name()))?;
    w.flush()?;
    manifest.finish(serde_json::to_value(a)?, None, &[csv_path.clone(), json_path])?;
    write_bound_csv(&mut *out, &points)?;
    let failed = points.iter().filter(|p| !p.status.is_ok()).count();
    Ok(if failed > 0 { EXIT_SOLVER } else { EXIT_OK })
}

fn cmd_compare(a: &CompareArgs, out: &mut dyn Write) -> Result<i32> {
    let manifest = ManifestWriter::new("compare", &a.out);
    let phase = family_set(FamilyArg::Phase, a.n)?;
    let platonic = family_set(FamilyArg::Platonic, a.n)?;
    let options = a.solver.options()?;
    let (axis, grid) = match (&a.p, &a.eps) {
        (Some(p), _) => ("p", parse_grid(p)?),
        (None, Some(e)) => ("epsilon", parse_grid(e)?),
        (None, None) => return Err(Error::InvalidArgument("give --p or --eps".into())),
    };
    if grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidArgument(format!("{axis} grid leaves [0, 1]")));
    }
    let solve = |set: &MeasurementSet, v: f64| -> Result<f64> {
        if axis == "p" {
            critical_epsilon_with(v, set, &options).map(|pt| pt.epsilon)
        } else {
            critical_p_with(v, set, &options).map(|pt| pt.p_star)
        }
    };
    let (col_a, col_b) = if axis == "p" { ("epsilon_phase", "epsilon_platonic") } else { ("p_star_phase", "p_star_platonic") };
    let csv_path = sibling(&a.out, ".csv");
    let mut rows: Vec<[String; 5]> = Vec::new();
    for &v in &grid {
        let x = solve(&phase, v)?;
        let y = solve(&platonic, v)?;
        rows.push([a.n.to_string(), format!("{v:.6}"), format!("{x:.9}"), format!("{y:.9}"), format!("{:.9}", y - x)]);
    }
    for sink in [&mut create(&csv_path)? as &mut dyn Write, out] {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["n", axis, col_a, col_b, "difference"])?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    manifest.finish(serde_json::to_value(a)?, None, &[csv_path])?;
    Ok(EXIT_OK)
}

fn cmd_lhs_bound(a: &LhsBoundArgs, out: &mut dyn Write) -> Result<i32> {
    let set = match (a.family, &a.settings) {
        (_, Some(path)) => {
            let set = MeasurementSet::from_json(&std::fs::read_to_string(path)?)?;
            if set.len() != a.n {
                return Err(Error::InvalidArgument(format!("--n {} but the settings file holds {}", a.n, set.len())));
            }
            set
        }
        (f, None) => family_set(f, a.n)?,
    };
    writeln!(out, "{:.10}", lossless_lhs_bound(&set)?)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let manifest = ManifestWriter::new("simulate", &a.out);
    let mut config = match &a.config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    config.validate()?;
    let options = VerdictOptions { conservative: a.conservative, lhs: a.solver.options()? };
    let calibration = if a.calibrate {
        let c = calibrate_phase(&config)?;
        config.phase_compensation = -c.phase_offset;
        config.slip_compensation = c.schedule_slip;
        Some(c)
    } else {
        None
    };
    let hist = simulate_run(&config)?;
    let n = config.n_settings;
    let klyshko = estimate_klyshko(&hist)?;
    let s_n = estimate_steering(&hist, n)?;
    let verdict = verdict_with(&s_n, klyshko.alice, n, &phase_encoding_set(n)?, &options)?;

    let verdict_path = sibling(&a.out, ".verdict.json");
    let csv_path = sibling(&a.out, ".histograms.csv");
    let hist_path = sibling(&a.out, ".histograms.json");
    hist.write_csv(create(&csv_path)?)?;
    let mut w = create(&hist_path)?;
    hist.to_json(&mut w)?;
    w.flush()?;
    let report = SimulationReport { manifest: manifest.name(), config: config.clone(), calibration, klyshko, verdict };
    let mut w = create(&verdict_path)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.flush()?;
    let seed = config.seed;
    manifest.finish(serde_json::to_value(&config)?, Some(seed), &[verdict_path, csv_path, hist_path])?;

    let v = &report.verdict;
    writeln!(
        out,
        "S_{n} = {:.5} +- {:.5}; epsilon = {:.4} +- {:.4}; p* = {:.5}; margin = {:.2} sigma; {}",
        v.s_n.value,
        v.s_n.std_error,
        v.epsilon_hat.value,
        v.epsilon_hat.std_error,
        v.p_star_at_epsilon,
        v.margin,
        if v.passed { "PASSED" } else { "FAILED" }
    )?;
    Ok(if v.passed { EXIT_OK } else { EXIT_TEST_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.10:0.10:1").unwrap(), vec![0.1]);
        let g = parse_grid("0.15:1.0:0.05").unwrap();
        assert_eq!(g.len(), 18);
        assert_eq!(g[3], 0.3);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(parse_grid("0.1:0.35:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        for bad in ["0.1:0.2", "a:b:c", "0.5:0.1:0.1", "0.1:0.2:0", "0.1:0.2:-1"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn setting_counts() {
        assert_eq!(parse_n_list("6-9").unwrap(), vec![6, 7, 8, 9]);
        assert_eq!(parse_n_list("2,3").unwrap(), vec![2, 3]);
        assert_eq!(parse_n_list("4").unwrap(), vec![4]);
        assert!(parse_n_list("9-6").is_err());
        assert!(parse_n_list("0").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        let mut o = Vec::new();
        let mut e = Vec::new();
        assert_eq!(run_with(["tbsteer", "frobnicate"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run_with(["tbsteer", "--version"], &mut o, &mut e), EXIT_OK);
        assert!(String::from_utf8_lossy(&o).contains(VERSION));
    }
}
