//! Scenario runner behind the `evodyn` binary.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::composition::{
    balanced_composition, custom_composition, make_grid, random_composition, reversed_composition,
    sorted_composition, BayesianStrategy, TypeGrid,
};
use crate::config::{ConfigError, InitialSpec, Origin, Scenario};
use crate::dynamics::{integrate, IntegrateOptions, RevisionProtocol, Tempering};
use crate::equilibria::{find_aggregate_equilibria, EquilibriumReport, DEFAULT_SCAN_RESOLUTION};
use crate::error::Error;
use crate::flows::{
    aggregate_velocity_from_flows, deficit_distributions, detailed_balance_residual,
    escape_certificate, flow_distributions, sosd_compare, Dominance, SwitchingRateDistribution,
};
use crate::game::{Action, PayoffFamily};
use crate::output::{write_csv, write_json, Cell};
use crate::stability::{
    critical_mass_sets, cutoff_deficit_curve, risk_dominant_action, select_most_robust,
    CriticalMassReport, RobustnessThreshold, DEFAULT_CRITICAL_MASS_RESOLUTION,
};

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "EVODYN_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Equilibria,
    Simulate,
    CriticalMass,
    Select,
    Flows,
    Escape,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Equilibria,
        Command::Simulate,
        Command::CriticalMass,
        Command::Select,
        Command::Flows,
        Command::Escape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Equilibria => "equilibria",
            Command::Simulate => "simulate",
            Command::CriticalMass => "critical-mass",
            Command::Select => "select",
            Command::Flows => "flows",
            Command::Escape => "escape",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown subcommand '{s}'"))
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Analysis(Error),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Analysis(e) => e.fmt(f),
            RunError::Io { path, source } => write!(f, "cannot write {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Analysis(e)
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
}

impl RunError {
    /// 2 for configuration problems, 3 for everything raised while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Io { .. } => "io",
            RunError::Analysis(e) => match e {
                Error::Input(_) => "input",
                Error::Construction(_) => "construction",
                Error::Integration { .. } => "integration",
                Error::Analysis(_) => "analysis",
                Error::Tie(_) => "tie",
            },
        }
    }

    /// Machine-readable form: `{"error": {"kind", "message", "line"?}}`.
    pub fn to_json(&self) -> String {
        let (message, line) = match self {
            RunError::Config(e) => (e.to_string(), e.line()),
            other => (other.to_string(), None),
        };
        let body = ErrorBody {
            kind: self.kind(),
            message,
            line,
        };
        serde_json::json!({ "error": body }).to_string()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let path = self.dir.join(name);
        write_json(&path, value).map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }

    fn csv<'a>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<Cell<'a>>>,
    ) -> Result<(), RunError> {
        let path = self.dir.join(name);
        write_csv(&path, header, rows).map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }
}

fn read_custom_rows(path: &Path) -> Result<Vec<(f64, f64)>, RunError> {
    let bad = |msg: String| {
        RunError::Config(ConfigError {
            origin: Origin::Missing,
            message: format!("{}: {msg}", path.display()),
        })
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "theta" || &headers[1] != "x" {
        return Err(bad("expected header 'theta,x'".into()));
    }
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {} is not two numbers", k + 2)))
        };
        rows.push((num(0)?, num(1)?));
    }
    Ok(rows)
}

/// Builds the configured initial composition on `grid`.
pub fn initial_composition(
    scenario: &Scenario,
    grid: &Arc<TypeGrid>,
) -> Result<BayesianStrategy, RunError> {
    Ok(match &scenario.initial {
        InitialSpec::Sorted { xbar0 } => sorted_composition(grid, *xbar0)?,
        InitialSpec::Reversed { xbar0 } => reversed_composition(grid, *xbar0)?,
        InitialSpec::Balanced {
            xbar0,
            kappa,
            pimax,
        } => balanced_composition(grid, &scenario.dist, &scenario.game, *xbar0, *kappa, *pimax)?,
        InitialSpec::Random { xbar0 } => {
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.sim.seed);
            random_composition(grid, *xbar0, &mut rng)?
        }
        InitialSpec::CustomCsv { path } => custom_composition(grid, &read_custom_rows(path)?)?,
    })
}

fn equilibria(scenario: &Scenario) -> Result<EquilibriumReport, RunError> {
    Ok(find_aggregate_equilibria(
        &scenario.game,
        &scenario.dist,
        DEFAULT_SCAN_RESOLUTION,
    )?)
}

#[derive(Serialize)]
struct SimulationSummary {
    n: usize,
    dt: f64,
    t_end: f64,
    protocol: RevisionProtocol,
    initial_xbar: f64,
    final_xbar: f64,
    min_xbar: f64,
    max_xbar: f64,
    clamped: f64,
}

fn simulate(scenario: &Scenario, out: &mut Outputs) -> Result<(), RunError> {
    let grid = make_grid(&scenario.dist, scenario.n)?;
    let x0 = initial_composition(scenario, &grid)?;
    let opts = IntegrateOptions {
        t_end: scenario.sim.t_end,
        dt: scenario.sim.dt,
        snapshot_times: scenario.sim.snapshot_times.clone(),
    };
    let traj = integrate(&scenario.game, &scenario.protocol, &x0, &opts)?;
    out.csv(
        "trajectory.csv",
        &["t", "xbar"],
        traj.times
            .iter()
            .zip(&traj.xbar)
            .map(|(&t, &x)| vec![Cell::Num(t), Cell::Num(x)]),
    )?;
    if !traj.snapshots.is_empty() {
        out.csv(
            "snapshots.csv",
            &["t", "theta", "x"],
            traj.snapshots.iter().flat_map(|s| {
                s.strategy
                    .nodes()
                    .iter()
                    .zip(s.strategy.values())
                    .map(move |(&th, &x)| vec![Cell::Num(s.t), Cell::Num(th), Cell::Num(x)])
            }),
        )?;
    }
    let summary = SimulationSummary {
        n: scenario.n,
        dt: scenario.sim.dt,
        t_end: scenario.sim.t_end,
        protocol: scenario.protocol,
        initial_xbar: traj.xbar[0],
        final_xbar: traj.final_xbar(),
        min_xbar: traj.xbar.iter().copied().fold(f64::INFINITY, f64::min),
        max_xbar: traj.xbar.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        clamped: traj.clamped,
    };
    out.json("simulate.json", &summary)
}

fn critical_mass(scenario: &Scenario, out: &mut Outputs) -> Result<(), RunError> {
    let eq = equilibria(scenario)?;
    let report = critical_mass_sets(
        &scenario.game,
        &scenario.dist,
        &scenario.protocol,
        &eq,
        DEFAULT_CRITICAL_MASS_RESOLUTION,
    )?;
    out.json("critical_mass.json", &report)?;
    let curve = cutoff_deficit_curve(
        &scenario.game,
        &scenario.dist,
        DEFAULT_CRITICAL_MASS_RESOLUTION,
    )?;
    out.csv(
        "cutoff_deficit.csv",
        &["xbar", "deficit"],
        curve
            .iter()
            .map(|p| vec![Cell::Num(p.xbar), Cell::Num(p.deficit)]),
    )
}

#[derive(Serialize)]
struct SelectOutput {
    thresholds: Vec<RobustnessThreshold>,
    selected: Option<f64>,
    tied: Vec<f64>,
    risk_dominant: Option<Action>,
}

#[derive(Serialize)]
struct SweepEntry {
    pisharp: f64,
    robust: Vec<f64>,
    critical_mass: CriticalMassReport,
}

fn sweep_threads(jobs: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()));
    cap.min(jobs).max(1)
}

fn select(scenario: &Scenario, out: &mut Outputs) -> Result<(), RunError> {
    let eq = equilibria(scenario)?;
    let report = select_most_robust(&scenario.game, &scenario.dist, &eq)?;
    let risk_dominant = match scenario.game.family() {
        PayoffFamily::LinearCoordination { cost } => risk_dominant_action(cost).ok(),
        PayoffFamily::Affine { .. } => None,
    };
    out.json(
        "select.json",
        &SelectOutput {
            thresholds: report.thresholds.clone(),
            selected: report.selected,
            tied: report.tied.clone(),
            risk_dominant,
        },
    )?;
    if scenario.sweep.is_empty() {
        return Ok(());
    }

    let k = match scenario.protocol {
        RevisionProtocol::Tempered(Tempering::Power { k } | Tempering::BoundedPower { k, .. }) => k,
        RevisionProtocol::Standard => 1.0,
    };
    let entry = |pisharp: f64| -> Result<SweepEntry, RunError> {
        let protocol = RevisionProtocol::bounded_power(k, pisharp)?;
        Ok(SweepEntry {
            pisharp,
            robust: report.robust_at(pisharp),
            critical_mass: critical_mass_sets(
                &scenario.game,
                &scenario.dist,
                &protocol,
                &eq,
                DEFAULT_CRITICAL_MASS_RESOLUTION,
            )?,
        })
    };
    let jobs: Vec<(usize, f64)> = scenario.sweep.iter().copied().enumerate().collect();
    let threads = sweep_threads(jobs.len());
    let chunk = jobs.len().div_ceil(threads);
    let mut results: Vec<(usize, Result<SweepEntry, RunError>)> = thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| s.spawn(|| part.iter().map(|&(i, p)| (i, entry(p))).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    results.sort_by_key(|(i, _)| *i);
    for (i, res) in results {
        let dir = out.dir.join(format!("sweep_{i:03}"));
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join("select.json");
        write_json(&path, &res?).map_err(io_err(&path))?;
        out.written.push(path);
    }
    Ok(())
}

#[derive(Serialize)]
struct FlowSummary {
    xbar_ref: f64,
    inflow_mass: f64,
    outflow_mass: f64,
    aggregate_velocity: f64,
    rate_balance_residual: f64,
    deficit_balance_residual: f64,
    /// `None` when the source masses differ by more than `2/n`.
    dominance: Option<Dominance>,
}

fn atom_rows<'a>(
    inflow: &'a SwitchingRateDistribution,
    outflow: &'a SwitchingRateDistribution,
) -> impl Iterator<Item = Vec<Cell<'a>>> {
    let tag = |d: &'a SwitchingRateDistribution, name: &'static str| {
        d.atoms()
            .iter()
            .map(move |a| vec![Cell::Num(a.q), Cell::Num(a.m), Cell::Text(name)])
    };
    tag(inflow, "inflow").chain(tag(outflow, "outflow"))
}

fn flows(scenario: &Scenario, out: &mut Outputs) -> Result<(), RunError> {
    let grid = make_grid(&scenario.dist, scenario.n)?;
    let x = initial_composition(scenario, &grid)?;
    let xbar_ref = x.aggregate().clamp(0.0, 1.0);
    let (qi, qo) = flow_distributions(&scenario.game, &scenario.protocol, &x, xbar_ref)?;
    let (pi, po) = deficit_distributions(&scenario.game, &x, xbar_ref)?;
    out.csv("flows.csv", &["q", "m", "source"], atom_rows(&qi, &qo))?;
    out.csv("deficits.csv", &["q", "m", "source"], atom_rows(&pi, &po))?;
    let summary = FlowSummary {
        xbar_ref,
        inflow_mass: qi.total_mass(),
        outflow_mass: qo.total_mass(),
        aggregate_velocity: aggregate_velocity_from_flows(&qi, &qo),
        rate_balance_residual: detailed_balance_residual(&qi, &qo),
        deficit_balance_residual: detailed_balance_residual(&pi, &po),
        dominance: sosd_compare(&qo, &qi, 2.0 / scenario.n as f64).ok(),
    };
    out.json("flows.json", &summary)
}

fn escape(scenario: &Scenario, out: &mut Outputs) -> Result<(), RunError> {
    let xbar_dagger = scenario.xbar_dagger.ok_or_else(|| {
        RunError::Config(ConfigError {
            origin: Origin::Missing,
            message: "missing required key escape.xbar_dagger".into(),
        })
    })?;
    let grid = make_grid(&scenario.dist, scenario.n)?;
    let x0 = initial_composition(scenario, &grid)?;
    let report = escape_certificate(
        &scenario.game,
        &scenario.dist,
        &scenario.protocol,
        &x0,
        xbar_dagger,
        scenario.escape_t_end,
    )?;
    out.json("escape.json", &report)?;
    out.csv(
        "bound.csv",
        &["t", "xbarbar"],
        report
            .bound
            .iter()
            .map(|p| vec![Cell::Num(p.t), Cell::Num(p.xbarbar)]),
    )
}

/// Runs one subcommand and returns the paths written under `out_dir`.
pub fn run(
    scenario: &Scenario,
    command: Command,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, RunError> {
    let mut out = Outputs::new(out_dir)?;
    match command {
        Command::Equilibria => {
            let report = equilibria(scenario)?;
            out.json("equilibria.json", &report)?;
        }
        Command::Simulate => simulate(scenario, &mut out)?,
        Command::CriticalMass => critical_mass(scenario, &mut out)?,
        Command::Select => select(scenario, &mut out)?,
        Command::Flows => flows(scenario, &mut out)?,
        Command::Escape => escape(scenario, &mut out)?,
    }
    Ok(out.written)
}
