//! Command-line front end. JSON reports go to stdout, CSV tables to `--out`
//! (or stdout when no file is given), diagnostics to stderr.

pub mod config;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::coefficients::assemble;
use crate::error::{Error, Result};
use crate::example;
use crate::filter::{
    observations::format_f64, reconstruct_duals, run_estimate, stream, FilterOptions, ObservationRecord, StreamSummary,
};
use crate::model::TimeGrid;
use crate::observability::{epsilon_sweep, geometric_schedule, growth_rate, sweep, ObservabilityVerdict};
use crate::oracle::{tikhonov_minimize, worst_case_error};
use crate::reduction::{split_direction, svd_reduce, to_canonical, CanonicalSystem};
use crate::simulate::{observe, simulate};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "minimax-dae", version, about = "Minimax state estimation for descriptor systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sub-optimal estimate and error bound for one ε.
    Estimate(Common),
    /// Decide whether ℓ lies in the observable subspace.
    Observability(Common),
    /// Simulate the scenario and write its observation record.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Append the state columns x1..xn.
        #[arg(long)]
        states: bool,
    },
    /// Error bound (and estimate) over a geometric ε schedule.
    Sweep(Common),
    /// Runs of the bundled example.
    Example {
        /// Optimal and sub-optimal estimates, error bound and true x2 over time.
        #[arg(long)]
        figure2: bool,
        #[command(flatten)]
        common: Common,
    },
    /// The SVD reduction of the configured system.
    Reduce {
        /// Include the canonical coefficient blocks (and ε-coefficients with --eps).
        #[arg(long)]
        dump_blocks: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Direct least-squares cross-checks.
    Oracle {
        #[command(subcommand)]
        kind: OracleKind,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleKind {
    /// Minimize the discretized Tikhonov functional and compare with the filter.
    Tikhonov(Common),
    /// Worst-case error of an estimator (the filter's, or one read from --u).
    Wce {
        #[command(flatten)]
        common: Common,
        /// CSV `t,u1..up` of estimator weights on the grid nodes.
        #[arg(long)]
        u: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration (defaults to the bundled example).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON scenario file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Direction ℓ, comma separated.
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub l: Option<Vector>,
    /// Regularization ε; `exp(x)` is accepted.
    #[arg(long, value_parser = parse_eps)]
    pub eps: Option<f64>,
    /// Geometric ε schedule `from:to:count`.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Number of grid steps.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Observation CSV `t,y1..yp`.
    #[arg(long)]
    pub obs: Option<PathBuf>,
    /// Output file for tables.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for pseudo-random scenario noise.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compensated accumulation (required below ε = 1e-12).
    #[arg(long)]
    pub compensated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vector(pub Vec<f64>);

pub fn parse_vector(s: &str) -> std::result::Result<Vector, String> {
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect::<std::result::Result<_, _>>().map(Vector)
}

pub fn parse_eps(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.strip_prefix("exp(").and_then(|r| r.strip_suffix(')')) {
        Some(inner) => inner.trim().parse::<f64>().map(f64::exp),
        None => s.parse::<f64>(),
    }
    .map_err(|e| format!("{s:?}: {e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("eps must be positive, got {s}"))
    }
}

/// `"from:to:count"`.
pub fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::InvalidInput(format!("sweep {s:?} is not from:to:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let from = parse_eps(parts[0]).map_err(|_| bad())?;
    let to = parse_eps(parts[1]).map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count < 2 {
        return Err(Error::InvalidInput("a sweep needs at least two points".into()));
    }
    Ok(geometric_schedule(from, to, count))
}

/// Everything a command needs, resolved from flags over the config.
pub struct Context {
    pub config: RunConfig,
    pub canon: CanonicalSystem,
    pub grid: TimeGrid,
    pub common: Common,
}

const DEFAULT_GRID: usize = 2000;
const DEFAULT_EPS: f64 = 1e-6;

impl Context {
    pub fn new(common: &Common) -> Result<Self> {
        let config = match &common.config {
            Some(p) => RunConfig::load(p)?,
            None => {
                eprintln!("no --config given; using the bundled example");
                config::paper_example()
            }
        };
        let steps = common.grid.or(config.grid).unwrap_or(DEFAULT_GRID);
        let (system, weights, grid) = config.model(steps)?;
        let canon = to_canonical(&system, &weights, &svd_reduce(&system.f))?;
        Ok(Self { config, canon, grid, common: common.clone() })
    }

    pub fn l(&self) -> Result<DVector<f64>> {
        let v = self
            .common
            .l
            .as_ref()
            .map(|v| v.0.clone())
            .or_else(|| self.config.l.clone())
            .ok_or_else(|| Error::InvalidInput("no direction: pass --l".into()))?;
        if v.len() != self.canon.m() {
            return Err(Error::Shape(format!("--l has {} entries, expected m = {}", v.len(), self.canon.m())));
        }
        Ok(DVector::from_vec(v))
    }

    pub fn eps(&self) -> f64 {
        self.common.eps.or(self.config.eps).unwrap_or(DEFAULT_EPS)
    }

    pub fn schedule(&self) -> Result<Vec<f64>> {
        match self.common.sweep.as_ref().or(self.config.sweep.as_ref()) {
            Some(s) => parse_sweep(s),
            None => Ok(geometric_schedule(1e-2, 1e-8, 7)),
        }
    }

    pub fn options(&self) -> FilterOptions {
        if self.common.compensated || self.config.compensated {
            FilterOptions::compensated()
        } else {
            FilterOptions::default()
        }
    }

    pub fn out(&self) -> Option<&Path> {
        self.common.out.as_deref().or(self.config.out.as_deref())
    }

    pub fn seed(&self) -> Option<u64> {
        self.common.seed.or(self.config.seed)
    }

    /// The scenario from `--scenario`, else from the config.
    pub fn scenario(&self) -> Result<Option<crate::simulate::ScenarioSpec>> {
        match &self.common.scenario {
            Some(p) => config::read_json::<config::ScenarioConfig>(p)?.build(self.seed().or(Some(0))).map(Some),
            None => self.config.scenario(self.seed().or(Some(0))),
        }
    }

    /// Observations from `--obs`, a scenario, or the config, in that order.
    pub fn observations(&self) -> Result<Option<ObservationRecord>> {
        if let Some(p) = self.common.obs.as_ref() {
            return ObservationRecord::read_csv(File::open(p)?).map(Some);
        }
        if self.common.scenario.is_none() {
            if let Some(p) = self.config.observations.as_ref() {
                return ObservationRecord::read_csv(File::open(p)?).map(Some);
            }
        }
        match self.scenario()? {
            Some(sc) => {
                let traj = simulate(&self.canon, &sc, &self.grid)?;
                observe(&self.canon, &traj, &sc.noise).map(Some)
            }
            None => Ok(None),
        }
    }
}

/// Write rows to `out`, or to stdout when `out` is `None`.
pub fn write_csv(out: Option<&Path>, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn cmd_estimate(common: &Common) -> Result<()> {
    let ctx = Context::new(common)?;
    let l = ctx.l()?;
    let y = ctx.observations()?;
    if y.is_none() {
        eprintln!("no observations; reporting the error bound only");
    }
    let run = run_estimate(&ctx.canon, &l, ctx.eps(), &ctx.grid, y.as_ref(), &ctx.options())?;
    for v in &run.report.diagnostics.coefficient_violations {
        eprintln!("warning: {v}");
    }
    if let Some(out) = ctx.out() {
        let r = ctx.canon.r();
        let stride = run.gains.grid.steps() / ctx.grid.steps();
        let mut header = vec!["t".to_string()];
        if run.x_hat.is_some() {
            header.extend(names("xhat", r));
        }
        header.extend(names("k", r));
        header.extend(names("z1_", r));
        let rows = (0..=ctx.grid.steps()).map(|k| {
            let j = k * stride;
            let mut row = vec![ctx.grid.node(k)];
            if let Some(x) = &run.x_hat {
                row.extend(x[j].iter());
            }
            row.extend(run.gains.k[j].diagonal().iter());
            row.extend(run.z1[j].iter());
            row
        });
        write_csv(Some(out), &header, rows)?;
    }
    print_json(&run.report)
}

pub fn cmd_observability(common: &Common) -> Result<ObservabilityVerdict> {
    let ctx = Context::new(common)?;
    let l = ctx.l()?;
    let verdict = epsilon_sweep(&ctx.canon, &l, &ctx.schedule()?, &ctx.grid, &ctx.options())?;
    if verdict.ill_conditioned {
        eprintln!("warning: least-squares condition estimate {:.3e}", verdict.condition_estimate);
    }
    if let Some(out) = ctx.out() {
        let header = ["eps", "sigma_hat"].map(String::from);
        let rows = verdict.sweep.iter().map(|e| vec![e.eps, e.sigma_hat.unwrap_or(f64::NAN)]);
        write_csv(Some(out), &header, rows)?;
    }
    print_json(&verdict)?;
    Ok(verdict)
}

pub fn cmd_simulate(common: &Common, states: bool) -> Result<()> {
    let ctx = Context::new(common)?;
    let sc = ctx.scenario()?.ok_or_else(|| Error::InvalidInput("no scenario: pass --scenario".into()))?;
    let traj = simulate(&ctx.canon, &sc, &ctx.grid)?;
    let y = observe(&ctx.canon, &traj, &sc.noise)?;
    let mut header = vec!["t".to_string()];
    header.extend(names("y", y.dim()));
    if states {
        header.extend(names("x", ctx.canon.n()));
    }
    let rows = (0..y.len()).map(|k| {
        let mut row = vec![y.times[k]];
        row.extend_from_slice(y.sample(k));
        if states {
            row.extend(traj.x[k].iter());
        }
        row
    });
    write_csv(ctx.out(), &header, rows)?;
    if ctx.out().is_some() {
        print_json(&traj.summary())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary {
    entries: usize,
    growth_rate: f64,
    failures: Vec<String>,
}

pub fn cmd_sweep(common: &Common) -> Result<()> {
    let ctx = Context::new(common)?;
    let l = ctx.l()?;
    let y = ctx.observations()?;
    let entries = sweep(&ctx.canon, &l, &ctx.schedule()?, &ctx.grid, y.as_ref(), &ctx.options());
    let failures: Vec<String> = entries.iter().filter_map(|e| e.error.as_ref().map(|m| format!("eps = {:e}: {m}", e.eps))).collect();
    for f in &failures {
        eprintln!("{f}");
    }
    let header = ["eps", "sigma_hat", "estimate"].map(String::from);
    let rows = entries.iter().map(|e| vec![e.eps, e.sigma_hat.unwrap_or(f64::NAN), e.estimate.unwrap_or(f64::NAN)]);
    write_csv(ctx.out(), &header, rows)?;
    if ctx.out().is_some() {
        print_json(&SweepSummary { entries: entries.len(), growth_rate: growth_rate(&entries), failures })?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Figure2Row {
    pub t: f64,
    pub optimal_estimate: f64,
    pub suboptimal_estimate: f64,
    pub suboptimal_error: f64,
    pub x2_true: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Figure2 {
    pub l: Vec<f64>,
    #[serde(skip)]
    pub rows: Vec<Figure2Row>,
    pub summary: StreamSummary,
}

/// The bundled example over time: exact filter, ε-filter estimate and
/// error bound for every horizon `t`, and the true `x2(t)`. The optimal
/// column is `NaN` when `ℓ1 ≠ 0` (no finite optimal estimate exists).
pub fn figure2(l: &DVector<f64>, eps: f64, steps: usize, options: &FilterOptions) -> Result<Figure2> {
    let sys = example::system();
    let canon = to_canonical(&sys, &example::weights(), &svd_reduce(&sys.f))?;
    let grid = sys.grid(steps)?;
    let sc = example::scenario();
    let traj = simulate(&canon, &sc, &grid)?;
    let y = observe(&canon, &traj, &sc.noise)?;
    let exact = example::exact_filter(&y, &grid);
    let mut rows = Vec::with_capacity(grid.node_count());
    let summary = stream(&canon, l, eps, &grid, Some(&y), options, |s| {
        let k = rows.len();
        rows.push(Figure2Row {
            t: s.t,
            optimal_estimate: if l[0] == 0.0 { l[1] * exact[k] } else { f64::NAN },
            suboptimal_estimate: s.estimate.unwrap_or(f64::NAN),
            suboptimal_error: s.sigma_hat,
            x2_true: traj.x[k][1],
        });
    })?;
    Ok(Figure2 { l: l.as_slice().to_vec(), rows, summary })
}

pub fn cmd_example(figure2_flag: bool, common: &Common) -> Result<()> {
    if !figure2_flag {
        return Err(Error::InvalidInput("choose an example: --figure2".into()));
    }
    let l = DVector::from_vec(common.l.clone().map_or(vec![0.0, 1.0], |v| v.0));
    if l.len() != 2 {
        return Err(Error::Shape("the example needs a 2-vector --l".into()));
    }
    let options = if common.compensated { FilterOptions::compensated() } else { FilterOptions::default() };
    let fig = figure2(&l, common.eps.unwrap_or(DEFAULT_EPS), common.grid.unwrap_or(DEFAULT_GRID), &options)?;
    let header = ["t", "optimal_estimate", "suboptimal_estimate", "suboptimal_error", "x2_true"].map(String::from);
    let rows = fig.rows.iter().map(|r| vec![r.t, r.optimal_estimate, r.suboptimal_estimate, r.suboptimal_error, r.x2_true]);
    write_csv(common.out.as_deref(), &header, rows)?;
    if common.out.is_some() {
        print_json(&fig)?;
    }
    Ok(())
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct BlocksDump {
    t: f64,
    c1: Vec<Vec<f64>>,
    c2: Vec<Vec<f64>>,
    c3: Vec<Vec<f64>>,
    c4: Vec<Vec<f64>>,
    q1: Vec<Vec<f64>>,
    q2: Vec<Vec<f64>>,
    q4: Vec<Vec<f64>>,
    s1: Vec<Vec<f64>>,
    s2: Vec<Vec<f64>>,
    s4: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct EpsDump {
    eps: f64,
    w: Vec<Vec<f64>>,
    m: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c_eps: Vec<Vec<f64>>,
    q_eps: Vec<Vec<f64>>,
    s_eps: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ReductionDump {
    m: usize,
    n: usize,
    p: usize,
    r: usize,
    singular_values: Vec<f64>,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    reconstruction_error: f64,
    q0_1: Vec<Vec<f64>>,
    q0_2: Vec<Vec<f64>>,
    q0_4: Vec<Vec<f64>>,
    q4_tilde: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blocks_t0: Option<BlocksDump>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients_t0: Option<EpsDump>,
}

pub fn cmd_reduce(dump_blocks: bool, common: &Common) -> Result<()> {
    let ctx = Context::new(common)?;
    let c = &ctx.canon;
    let tf = &c.transform;
    let t0 = c.t0();
    let blocks = if dump_blocks {
        let b = c.blocks_at(t0)?;
        Some(BlocksDump {
            t: t0,
            c1: rows_of(&b.c1),
            c2: rows_of(&b.c2),
            c3: rows_of(&b.c3),
            c4: rows_of(&b.c4),
            q1: rows_of(&b.q1),
            q2: rows_of(&b.q2),
            q4: rows_of(&b.q4),
            s1: rows_of(&b.s1),
            s2: rows_of(&b.s2),
            s4: rows_of(&b.s4),
            h: rows_of(&b.h),
        })
    } else {
        None
    };
    let coefficients = match (dump_blocks, common.eps) {
        (true, Some(eps)) => {
            let e = assemble(c, t0, eps)?;
            Some(EpsDump {
                eps,
                w: rows_of(&e.w),
                m: rows_of(&e.m),
                a: rows_of(&e.a),
                b: rows_of(&e.b),
                c_eps: rows_of(&e.c_eps),
                q_eps: rows_of(&e.q_eps),
                s_eps: rows_of(&e.s_eps),
            })
        }
        _ => None,
    };
    print_json(&ReductionDump {
        m: c.m(),
        n: c.n(),
        p: c.p(),
        r: c.r(),
        singular_values: tf.d.iter().map(|d| d.sqrt()).collect(),
        u: rows_of(&tf.u),
        v: rows_of(&tf.v),
        reconstruction_error: (tf.reconstruct() - &c.system.f).amax(),
        q0_1: rows_of(&c.q0_1),
        q0_2: rows_of(&c.q0_2),
        q0_4: rows_of(&c.q0_4),
        q4_tilde: rows_of(&c.q4_tilde),
        blocks_t0: blocks,
        coefficients_t0: coefficients,
    })
}

#[derive(Serialize)]
struct TikhonovReport {
    oracle: crate::oracle::TikhonovSummary,
    filter_tikhonov_value: f64,
    relative_difference: f64,
    u_relative_l2: f64,
    z_relative_l2: f64,
}

fn relative_l2(a: &[DVector<f64>], b: &[DVector<f64>], grid: &TimeGrid) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).collect();
    let base: Vec<f64> = b.iter().map(|y| y.norm_squared()).collect();
    let den = crate::numerics::trapezoid(&base, grid);
    if den == 0.0 {
        crate::numerics::trapezoid(&diff, grid).sqrt()
    } else {
        (crate::numerics::trapezoid(&diff, grid) / den).sqrt()
    }
}

/// Filter duals `(û_ε, ẑ_ε)` sampled on the nodes of `grid`.
pub fn filter_duals_on(
    canon: &CanonicalSystem,
    l: &DVector<f64>,
    eps: f64,
    grid: &TimeGrid,
    options: &FilterOptions,
) -> Result<(f64, Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    let run = run_estimate(canon, l, eps, grid, None, options)?;
    let duals = reconstruct_duals(canon, &run.gains, &run.z1)?;
    let stride = run.gains.grid.steps() / grid.steps();
    let u = (0..=grid.steps()).map(|k| duals.u[k * stride].clone()).collect();
    let z = (0..=grid.steps()).map(|k| duals.z(k * stride)).collect();
    Ok((run.report.tikhonov_value, u, z))
}

pub fn cmd_oracle_tikhonov(common: &Common) -> Result<()> {
    let ctx = Context::new(common)?;
    let l = ctx.l()?;
    let eps = ctx.eps();
    let d = tikhonov_minimize(&ctx.canon, &l, eps, &ctx.grid)?;
    let (value, u, z) = filter_duals_on(&ctx.canon, &l, eps, &ctx.grid, &ctx.options())?;
    print_json(&TikhonovReport {
        oracle: d.summary(eps),
        filter_tikhonov_value: value,
        relative_difference: (value - d.tikhonov_value).abs() / d.tikhonov_value.abs().max(f64::MIN_POSITIVE),
        u_relative_l2: relative_l2(&u, &d.u, &ctx.grid),
        z_relative_l2: relative_l2(&z, &d.z, &ctx.grid),
    })
}

#[derive(Serialize)]
struct WceReport {
    source: String,
    eps: Option<f64>,
    /// `None` when no admissible adjoint solution exists.
    worst_case: Option<crate::oracle::WorstCase>,
    infinite: Option<InfiniteReport>,
}

#[derive(Serialize)]
struct InfiniteReport {
    feasibility_residual: f64,
    tolerance: f64,
}

pub fn cmd_oracle_wce(common: &Common, u_path: Option<&Path>) -> Result<()> {
    let ctx = Context::new(common)?;
    let l = ctx.l()?;
    let (u, source, eps) = match u_path {
        Some(p) => {
            let rec = ObservationRecord::read_csv(File::open(p)?)?;
            let u = ctx.grid.nodes().map(|t| rec.value(t)).collect::<Vec<_>>();
            (u, p.display().to_string(), None)
        }
        None => {
            let eps = ctx.eps();
            let (_, u, _) = filter_duals_on(&ctx.canon, &l, eps, &ctx.grid, &ctx.options())?;
            (u, "filter".to_string(), Some(eps))
        }
    };
    let (l1, _) = split_direction(&l, &ctx.canon.transform);
    if l1.amax() == 0.0 && l.amax() != 0.0 {
        eprintln!("note: l has no component in the range of F; every estimate is exact");
    }
    let (worst_case, infinite) = match worst_case_error(&ctx.canon, &l, &u, &ctx.grid) {
        Ok(w) => (Some(w), None),
        Err(Error::Infinite { residual, tolerance }) => {
            eprintln!("no admissible adjoint solution for these weights: the worst-case error is infinite");
            (None, Some(InfiniteReport { feasibility_residual: residual, tolerance }))
        }
        Err(e) => return Err(e),
    };
    print_json(&WceReport { source, eps, worst_case, infinite })
}

/// Parse arguments and run; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(c) => cmd_estimate(c),
        Command::Observability(c) => cmd_observability(c).map(|_| ()),
        Command::Simulate { common, states } => cmd_simulate(common, *states),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Example { figure2, common } => cmd_example(*figure2, common),
        Command::Reduce { dump_blocks, common } => cmd_reduce(*dump_blocks, common),
        Command::Oracle { kind: OracleKind::Tikhonov(c) } => cmd_oracle_tikhonov(c),
        Command::Oracle { kind: OracleKind::Wce { common, u } } => cmd_oracle_wce(common, u.as_deref()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
