//! Command-line front end.
//!
//! Exit status is 0 on success, 2 for usage errors and unreadable or
//! malformed input, and 1 for engine faults and failed analyses.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::icgen::{generate, IcKind, IcSpec};
use crate::io::{read_snapshot, save_snapshot, AnalysisTable, SNAPSHOT_TAG};
use crate::mfractal::{
    analytic_dimension, analytic_tau, cascade_ladder, correlation_function, dimension_curve, f_alpha,
    geometric_radii, measure_ladder, pointwise_dimension, sample_cascade, CorrelationConfig, DqConfig, DqCurve,
    LGridConfig, PointSet, PointwiseConfig, RangePolicy, ScalingConfig, ScalingFit, Space,
};
use crate::model::{preset, ModelKind, Snapshot};

#[derive(Debug, Parser)]
#[command(name = "ogs", version, about = "Comoving one-dimensional gravity simulations and multifractal analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve an initial condition and write snapshot files.
    Simulate(SimulateArgs),
    /// Analyse a snapshot or point table.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Measure D_q of a binomial cascade against the closed form.
    BenchBinomial(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: ModelKind,
    /// Number of sheets.
    #[arg(long)]
    pub n: usize,
    /// Box length in Jeans lengths.
    #[arg(long)]
    pub box_jeans: f64,
    #[arg(long, default_value = "waterbag")]
    pub ic: IcKind,
    /// Velocity half-width, standard deviation or step scale.
    #[arg(long)]
    pub vparam: f64,
    #[arg(long)]
    pub tmax: f64,
    /// Snapshot interval; defaults to one snapshot at the start and one at
    /// `tmax`.
    #[arg(long)]
    pub snap_every: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, env = "OGS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Generalized dimensions D_q and tau_q.
    Dq(DqArgs),
    /// Singularity spectrum f(alpha) from tau_q.
    Falpha(DqArgs),
    /// Two-point correlation function and exponent.
    Corr(CorrArgs),
    /// Distribution of pointwise dimensions.
    Pointwise(PointwiseArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Snapshot file, or a table with an `x` column (and `v` for mu-space).
    #[arg(long)]
    pub input: PathBuf,
    /// Table destination; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    /// longest, larger-l, or fixed:L_LO:L_HI.
    #[arg(long, default_value = "longest", value_parser = parse_policy)]
    pub range_policy: RangePolicy,
    #[arg(long, default_value_t = 1.5)]
    pub min_decades: f64,
    #[arg(long, default_value_t = 0.995)]
    pub min_r2: f64,
    /// Largest residual as a fraction of the fitted rise.
    #[arg(long, default_value_t = 0.02)]
    pub max_residual: f64,
    /// Reject windows where some two-line split changes slope by more than
    /// this fraction; `inf` disables the test.
    #[arg(long, default_value_t = 0.1)]
    pub max_slope_change: f64,
}

impl ScalingArgs {
    fn config(&self) -> ScalingConfig {
        ScalingConfig {
            min_decades: self.min_decades,
            min_r2: self.min_r2,
            max_residual: self.max_residual,
            max_slope_change: self.max_slope_change,
            ..ScalingConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct DqArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long, default_value = "x")]
    pub space: Space,
    /// LO:HI:STEP or a comma-separated list.
    #[arg(long, default_value = "-5:10:0.25", allow_hyphen_values = true)]
    pub q: QList,
    #[command(flatten)]
    pub scaling: ScalingArgs,
    /// Leave out cells with fewer points.
    #[arg(long, default_value_t = 1)]
    pub min_occupancy: u64,
    #[arg(long)]
    pub l_min: Option<f64>,
    #[arg(long)]
    pub l_max: Option<f64>,
    /// Stop refining once more than this fraction of points is alone in a
    /// cell; 1 disables the rule.
    #[arg(long, default_value_t = 1.0)]
    pub max_singleton: f64,
    /// Stop refining once occupied cells average fewer points.
    #[arg(long, default_value_t = 1.0)]
    pub min_mean_occupancy: f64,
}

#[derive(Debug, Args)]
pub struct CorrArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// Linear bin width; defaults to 2^-20 of the window.
    #[arg(long)]
    pub bin: Option<f64>,
    /// LO:HI window of positions; defaults to the central half of the box.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub bins_per_decade: usize,
    /// Write the linear bins instead of the logarithmic ones.
    #[arg(long)]
    pub linear: bool,
    #[command(flatten)]
    pub scaling: ScalingArgs,
}

#[derive(Debug, Args)]
pub struct PointwiseArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long)]
    pub r_min: f64,
    #[arg(long)]
    pub r_max: f64,
    #[arg(long, default_value_t = 16)]
    pub radii: usize,
    #[arg(long, default_value_t = 1000)]
    pub centers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchMode {
    Exact,
    Sampled,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 14)]
    pub levels: u32,
    #[arg(long, default_value_t = 0.3)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = BenchMode::Exact)]
    pub mode: BenchMode,
    /// Points drawn in sampled mode.
    #[arg(long, default_value_t = 1 << 17)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "0,1,2,5,10", allow_hyphen_values = true)]
    pub q: QList,
    #[arg(long, default_value = "larger-l", value_parser = parse_policy)]
    pub range_policy: RangePolicy,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Orders parsed from `LO:HI:STEP` or `a,b,c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QList(pub Vec<f64>);

impl FromStr for QList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("invalid q list '{s}'"));
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [lo, hi, step] => {
                let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
                crate::mfractal::q_grid(num(lo)?, num(hi)?, num(step)?)?
            }
            [list] => list.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?,
            _ => return Err(bad()),
        };
        if values.is_empty() || values.iter().any(|q: &f64| !q.is_finite()) {
            return Err(bad());
        }
        Ok(QList(values))
    }
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got '{s}'"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("invalid number '{a}'"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("invalid number '{b}'"))?;
    if !(a < b) {
        return Err(format!("expected LO < HI, got '{s}'"));
    }
    Ok((a, b))
}

fn parse_policy(s: &str) -> std::result::Result<RangePolicy, String> {
    match s {
        "longest" => Ok(RangePolicy::Longest),
        "larger-l" => Ok(RangePolicy::LargerL),
        _ => {
            let rest = s.strip_prefix("fixed:").ok_or_else(|| format!("unknown range policy '{s}'"))?;
            let (l_lo, l_hi) = parse_pair(rest)?;
            if !(l_lo > 0.0) {
                return Err("fixed range needs positive cell sizes".into());
            }
            Ok(RangePolicy::Fixed { l_lo, l_hi })
        }
    }
}

/// Parse the process arguments, run, and map errors to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Format(_) | Error::Io(_) => 2,
        Error::Engine(_) | Error::Analysis(_) | Error::Undefined(_) => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Analyze(AnalyzeCommand::Dq(a)) => analyze_dq(&a, false),
        Command::Analyze(AnalyzeCommand::Falpha(a)) => analyze_dq(&a, true),
        Command::Analyze(AnalyzeCommand::Corr(a)) => analyze_corr(&a),
        Command::Analyze(AnalyzeCommand::Pointwise(a)) => analyze_pointwise(&a),
        Command::BenchBinomial(a) => bench_binomial(&a),
    }
}

/// `0, dt, 2 dt, ...` up to and including `tmax`.
pub fn snapshot_times(tmax: f64, every: Option<f64>) -> Result<Vec<f64>> {
    if !(tmax >= 0.0 && tmax.is_finite()) {
        return Err(Error::config(format!("tmax must be finite and >= 0, got {tmax}")));
    }
    let mut times = vec![0.0];
    match every {
        Some(dt) if !(dt > 0.0 && dt.is_finite()) => {
            return Err(Error::config(format!("snap-every must be positive, got {dt}")));
        }
        Some(dt) => {
            let steps = (tmax / dt * (1.0 + 1e-12)).floor() as u64;
            if steps > 1_000_000 {
                return Err(Error::config("snap-every yields more than a million snapshots"));
            }
            times.extend((1..=steps).map(|k| k as f64 * dt));
        }
        None => {}
    }
    if tmax > *times.last().unwrap_or(&0.0) * (1.0 + 1e-12) {
        times.push(tmax);
    }
    Ok(times)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let model = preset(a.model, a.n, a.box_jeans)?;
    let spec =
        IcSpec { kind: a.ic, n_particles: a.n, box_length: a.box_jeans, velocity_scale: a.vparam, seed: a.seed };
    let times = snapshot_times(a.tmax, a.snap_every)?;
    let initial = generate(&spec, &model)?;
    fs::create_dir_all(&a.out)?;
    let mut engine = Engine::new(&initial)?;
    for (k, &t) in times.iter().enumerate() {
        engine.advance_to(t)?;
        let snap = engine.snapshot()?;
        let path = a.out.join(format!("snap_{k:05}.tsv"));
        save_snapshot(&snap, &path)?;
        let stats = engine.stats();
        eprintln!(
            "tau={t} events={} crossings={} wraps={} -> {}",
            stats.events,
            stats.crossings,
            stats.wraps,
            path.display()
        );
    }
    Ok(())
}

/// Points and, for snapshot input, the snapshot they came from.
fn load_points(path: &Path, space: Space) -> Result<(PointSet, Option<Snapshot>)> {
    let mut reader = BufReader::new(File::open(path)?);
    let is_snapshot = {
        let buf = reader.fill_buf()?;
        let tag = format!("# {SNAPSHOT_TAG}");
        buf.starts_with(tag.as_bytes())
    };
    if is_snapshot {
        let snap = read_snapshot(reader)?;
        return Ok((PointSet::from_snapshot(&snap, space), Some(snap)));
    }
    let table = AnalysisTable::read(reader)?;
    let x = table.column("x").ok_or_else(|| Error::format("point table has no 'x' column"))?;
    let points = match space {
        Space::Position => PointSet::Line(x),
        Space::Phase => {
            let v = table.column("v").ok_or_else(|| Error::format("mu-space needs a 'v' column"))?;
            PointSet::Plane(x.into_iter().zip(v).map(|(x, v)| [x, v]).collect())
        }
    };
    if points.is_empty() {
        return Err(Error::format("point table is empty"));
    }
    Ok((points, None))
}

fn emit(table: &AnalysisTable, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => table.write(BufWriter::new(File::create(path)?)),
        None => table.write(io::stdout().lock()),
    }
}

fn report_ranges(label: &str, fit: &ScalingFit, chosen: Option<(f64, f64)>) {
    let mut line = format!("{label}: ");
    match chosen {
        Some((lo, hi)) => line.push_str(&format!("chosen [{lo:.4e}, {hi:.4e}]")),
        None => line.push_str("no scaling range"),
    }
    for r in &fit.ranges {
        line.push_str(&format!(
            "; detected [{:.4e}, {:.4e}] {:.2} decades slope {:.5} r2 {:.5}",
            r.l_lo,
            r.l_hi,
            r.decades(),
            r.fit.slope,
            r.fit.r2
        ));
    }
    eprintln!("{line}");
}

fn dimension_from_args(a: &DqArgs) -> Result<DqCurve> {
    let (points, _) = load_points(&a.io.input, a.space)?;
    let grid = LGridConfig {
        l_max: a.l_max,
        l_min: a.l_min,
        max_singleton_fraction: a.max_singleton,
        min_mean_occupancy: a.min_mean_occupancy,
        ..LGridConfig::default()
    };
    let ladder = measure_ladder(&points, &grid)?;
    let cfg = DqConfig { scaling: a.scaling.config(), policy: a.scaling.range_policy, min_occupancy: a.min_occupancy };
    let curve = dimension_curve(&ladder, &a.q.0, &cfg)?;
    for e in &curve.entries {
        report_ranges(&format!("q={}", e.q), &e.fit, e.range.map(|r| (r.l_lo, r.l_hi)));
    }
    Ok(curve)
}

fn analyze_dq(a: &DqArgs, spectrum: bool) -> Result<()> {
    let curve = dimension_from_args(a)?;
    let table = if spectrum {
        let mut t = AnalysisTable::new(["q", "alpha", "f_alpha", "tau_q"]);
        for s in f_alpha(&curve)? {
            t.push(vec![s.q, s.alpha, s.f, s.q * s.alpha - s.f])?;
        }
        t
    } else {
        let mut t = AnalysisTable::new(["q", "D_q", "tau_q", "stderr", "l_lo", "l_hi", "r2", "ranges"]);
        for e in &curve.entries {
            let nan = f64::NAN;
            let r = e.range;
            t.push(vec![
                e.q,
                e.dimension.unwrap_or(nan),
                e.tau.unwrap_or(nan),
                e.stderr.unwrap_or(nan),
                r.map_or(nan, |r| r.l_lo),
                r.map_or(nan, |r| r.l_hi),
                r.map_or(nan, |r| r.fit.r2),
                e.fit.ranges.len() as f64,
            ])?;
        }
        t
    };
    emit(&table, a.io.output.as_deref())
}

fn analyze_corr(a: &CorrArgs) -> Result<()> {
    let (points, snap) = load_points(&a.io.input, Space::Position)?;
    let PointSet::Line(xs) = points else { unreachable!("position space is one-dimensional") };
    let (box_length, window) = match (&snap, a.window) {
        (_, Some(w)) => (w.1 - w.0, Some(w)),
        (Some(s), None) => (s.model.box_length, None),
        (None, None) => {
            let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
            let q = (hi - lo) / 4.0;
            (hi - lo, Some((lo + q, hi - q)))
        }
    };
    let width = window.map_or(box_length / 2.0, |w| w.1 - w.0);
    let mut cfg = CorrelationConfig::new(a.bin.unwrap_or(width / (1u64 << 20) as f64));
    cfg.window = window;
    cfg.r_max = a.r_max;
    cfg.bins_per_decade = a.bins_per_decade;
    cfg.scaling = a.scaling.config();
    cfg.policy = a.scaling.range_policy;
    let corr = correlation_function(&xs, box_length, &cfg)?;
    report_ranges("correlation", &corr.fit, corr.range.map(|r| (r.l_lo, r.l_hi)));
    match (corr.gamma, corr.correlation_dimension) {
        (Some(g), Some(d2)) => eprintln!("gamma={g:.5} D2={d2:.5} points={}", corr.points),
        _ => eprintln!("no correlation exponent; points={}", corr.points),
    }
    let bins = if a.linear { &corr.linear } else { &corr.logarithmic };
    let mut t = AnalysisTable::new(["r", "C_r", "sigma", "pairs", "r_lo", "r_hi"]);
    for b in bins {
        t.push(vec![b.r(), b.c, b.sigma, b.pairs as f64, b.r_lo, b.r_hi])?;
    }
    emit(&t, a.io.output.as_deref())
}

fn analyze_pointwise(a: &PointwiseArgs) -> Result<()> {
    let (points, snap) = load_points(&a.io.input, Space::Position)?;
    let PointSet::Line(xs) = points else { unreachable!("position space is one-dimensional") };
    let periodic = snap.filter(|s| s.model.periodic).map(|s| s.model.box_length);
    let cfg = PointwiseConfig { radii: geometric_radii(a.r_min, a.r_max, a.radii)?, centers: a.centers, periodic };
    let summary = pointwise_dimension(&xs, &cfg)?;
    eprintln!(
        "pointwise: median {:.5} quartiles [{:.5}, {:.5}] over {} centres",
        summary.median,
        summary.lower_quartile,
        summary.upper_quartile,
        summary.alphas.len()
    );
    let mut t = AnalysisTable::new(["alpha"]);
    for &alpha in &summary.alphas {
        t.push(vec![alpha])?;
    }
    emit(&t, a.io.output.as_deref())
}

fn bench_binomial(a: &BenchArgs) -> Result<()> {
    let ladder = match a.mode {
        BenchMode::Exact => cascade_ladder(a.levels, a.p)?,
        BenchMode::Sampled => {
            let xs = sample_cascade(a.levels, a.p, a.n, a.seed)?;
            measure_ladder(&PointSet::Line(xs), &LGridConfig::default())?
        }
    };
    let cfg = DqConfig { policy: a.range_policy, ..DqConfig::default() };
    let curve = dimension_curve(&ladder, &a.q.0, &cfg)?;
    let mut t = AnalysisTable::new([
        "q",
        "D_measured",
        "D_analytic",
        "rel_error",
        "tau_measured",
        "tau_analytic",
        "l_lo",
        "l_hi",
        "ranges",
    ]);
    for e in &curve.entries {
        report_ranges(&format!("q={}", e.q), &e.fit, e.range.map(|r| (r.l_lo, r.l_hi)));
        let (d_exact, tau_exact) = (analytic_dimension(a.p, e.q), analytic_tau(a.p, e.q));
        let nan = f64::NAN;
        let d = e.dimension.unwrap_or(nan);
        t.push(vec![
            e.q,
            d,
            d_exact,
            ((d - d_exact) / d_exact).abs(),
            e.tau.unwrap_or(nan),
            tau_exact,
            e.range.map_or(nan, |r| r.l_lo),
            e.range.map_or(nan, |r| r.l_hi),
            e.fit.ranges.len() as f64,
        ])?;
    }
    emit(&t, a.output.as_deref())
}

