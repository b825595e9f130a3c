//! Subcommand execution.

use std::f64::consts::PI;

use ellipcert::analysis::{
    compute_constants, scan_region, AnalysisError, AnalysisOptions, EquationConstants, ExistencePrep, ExistenceReport, NonexistencePrep,
    NonexistenceReport, Radii, ScanRow, SearchOptions,
};
use ellipcert::green::{validate_bounds, ConstantOptions, GreenBoundsReport};
use ellipcert::operator::{verify_assumptions, AssumptionReport, AssumptionTolerances};
use ellipcert::solver::{fixed_point_iterate, initial_fields, FixedPointResult, SolverError, Start, System};
use ellipcert::spectral::{principal_eigenpair, EigenPair};
use ellipcert::Real;
use serde::Serialize;
use thiserror::Error;

use crate::config::{parse_config, ConfigError, Precision, RunConfig};
use crate::report::{field_csv, scan_csv, Envelope};

pub const EXAMPLE41: &str = include_str!("../../../configs/example41.cfg");
pub const EXAMPLE42: &str = include_str!("../../../configs/example42.cfg");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Example {
    Example41,
    Example42,
}

impl Example {
    pub fn config_text(self) -> &'static str {
        match self {
            Example::Example41 => EXAMPLE41,
            Example::Example42 => EXAMPLE42,
        }
    }

    /// The bundled configuration.
    pub fn config(self) -> RunConfig {
        parse_config(self.config_text()).expect("bundled configuration parses")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Constants,
    Spectrum,
    CheckExistence,
    CheckNonexistence,
    Solve,
    Scan,
    ValidateGreen,
    Reproduce(Example),
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Spectrum => "spectrum",
            Command::CheckExistence => "check-existence",
            Command::CheckNonexistence => "check-nonexistence",
            Command::Solve => "solve",
            Command::Scan => "scan",
            Command::ValidateGreen => "validate-green",
            Command::Reproduce(Example::Example41) => "reproduce example41",
            Command::Reproduce(Example::Example42) => "reproduce example42",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Setup(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// JSON report, exit code and extra files (name, contents).
#[derive(Debug)]
pub struct Outcome {
    pub report: String,
    pub exit_code: i32,
    pub artifacts: Vec<(String, String)>,
}

fn outcome<R: Serialize>(env: &Envelope<R>, artifacts: Vec<(String, String)>) -> Result<Outcome, RunError> {
    let exit_code = match env.verdict {
        Some(false) => 2,
        _ => 0,
    };
    let mut report = serde_json::to_string_pretty(env)?;
    report.push('\n');
    Ok(Outcome {
        report,
        exit_code,
        artifacts,
    })
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome, RunError> {
    match cfg.precision {
        Precision::F64 => run_as::<f64>(cmd, cfg),
        Precision::F32 => run_as::<f32>(cmd, cfg),
    }
}

fn analysis_options(cfg: &RunConfig) -> AnalysisOptions {
    let c = &cfg.constants;
    AnalysisOptions {
        green: ConstantOptions {
            full_sweep_limit: c.full_sweep_limit,
            samples: c.samples,
        },
        eigen_tol: c.eigen_tol,
        eigen_max_iter: c.eigen_max_iter,
        search: SearchOptions {
            seed: c.seed,
            ..SearchOptions::default()
        },
    }
}

fn radii(cfg: &RunConfig) -> Result<Radii, RunError> {
    cfg.radii.clone().ok_or_else(|| RunError::Setup("this command needs a [radii] section".into()))
}

fn build<T: Real>(cfg: &RunConfig) -> Result<System<T>, RunError> {
    let spec = cfg.system::<T>().map_err(RunError::Setup)?;
    Ok(System::build(spec)?)
}

#[derive(Serialize)]
struct ConstantsEntry {
    k: usize,
    constants: EquationConstants,
    assumptions: AssumptionReport,
}

#[derive(Serialize)]
struct SpectrumEntry<T: Real> {
    k: usize,
    shares_operator_of: Option<usize>,
    eigen: EigenPair<T>,
}

#[derive(Serialize)]
struct GreenEntry {
    k: usize,
    bounds: GreenBoundsReport,
}

#[derive(Serialize)]
struct SolveResult<T: Real> {
    start: String,
    result: FixedPointResult<T>,
}

#[derive(Serialize)]
struct ScanResult {
    k: usize,
    points: usize,
    existence_points: usize,
    nonexistence_points: usize,
    both: usize,
    rows: Vec<ScanRow>,
}

fn run_as<T: Real>(cmd: Command, cfg: &RunConfig) -> Result<Outcome, RunError> {
    let opts = analysis_options(cfg);
    match cmd {
        Command::Constants => {
            let sys = build::<T>(cfg)?;
            let consts = compute_constants(&sys, &opts)?;
            let entries: Vec<ConstantsEntry> = consts
                .into_iter()
                .enumerate()
                .map(|(k, constants)| ConstantsEntry {
                    k: k + 1,
                    constants,
                    assumptions: verify_assumptions(&sys.spec.equations[k].operator, sys.dom(), AssumptionTolerances::default()),
                })
                .collect();
            outcome(&Envelope::new(cmd.name(), cfg, sys.dom(), entries), vec![])
        }
        Command::Spectrum => {
            let sys = build::<T>(cfg)?;
            let mut entries = Vec::new();
            for k in 0..sys.m() {
                let owner = sys.green_owner(k);
                let eigen = principal_eigenpair(sys.green(k), T::lit(cfg.constants.eigen_tol), cfg.constants.eigen_max_iter)
                    .map_err(AnalysisError::from)?;
                entries.push(SpectrumEntry {
                    k: k + 1,
                    shares_operator_of: (owner < k).then_some(owner + 1),
                    eigen,
                });
            }
            let artifacts = entries.iter().map(|e| (format!("phi{}.csv", e.k), field_csv(sys.dom(), &e.eigen.phi))).collect();
            outcome(&Envelope::new(cmd.name(), cfg, sys.dom(), entries), artifacts)
        }
        Command::CheckExistence => {
            let r = radii(cfg)?;
            let sys = build::<T>(cfg)?;
            let consts = compute_constants(&sys, &opts)?;
            let rep = ExistencePrep::new(&sys.spec, &r, &consts, &opts.search)?.evaluate(&sys.spec.lambdas(), &sys.spec.etas())?;
            let env = Envelope::new(cmd.name(), cfg, sys.dom(), &rep).with_verdict(rep.verdict, rep.inequalities.clone());
            outcome(&env, vec![])
        }
        Command::CheckNonexistence => {
            let r = radii(cfg)?;
            let sys = build::<T>(cfg)?;
            let consts = compute_constants(&sys, &opts)?;
            let rep = NonexistencePrep::new(&sys.spec, &r, &consts, &opts.search)?.evaluate(&sys.spec.lambdas(), &sys.spec.etas());
            let env = Envelope::new(cmd.name(), cfg, sys.dom(), &rep).with_verdict(rep.verdict, rep.inequalities.clone());
            outcome(&env, vec![])
        }
        Command::Solve => {
            let sys = build::<T>(cfg)?;
            let res = solve(&sys, cfg, &cfg.solve.start)?;
            let artifacts = res.fields.iter().enumerate().map(|(k, u)| (format!("u{}.csv", k + 1), field_csv(sys.dom(), u))).collect();
            let env = Envelope::new(
                cmd.name(),
                cfg,
                sys.dom(),
                SolveResult {
                    start: format!("{:?}", cfg.solve.start),
                    result: res,
                },
            );
            outcome(&env, artifacts)
        }
        Command::Scan => {
            let grid = cfg.scan.clone().ok_or_else(|| RunError::Setup("scan needs a [scan] section".into()))?;
            let r = radii(cfg)?;
            let sys = build::<T>(cfg)?;
            let consts = compute_constants(&sys, &opts)?;
            let ex = ExistencePrep::new(&sys.spec, &r, &consts, &opts.search)?;
            let ne = NonexistencePrep::new(&sys.spec, &r, &consts, &opts.search)?;
            let rows = scan_region(&ex, &ne, &sys.spec.lambdas(), &sys.spec.etas(), &grid, cfg.threads)?;
            let csv = scan_csv(&rows);
            let res = ScanResult {
                k: grid.k + 1,
                points: rows.len(),
                existence_points: rows.iter().filter(|r| r.existence).count(),
                nonexistence_points: rows.iter().filter(|r| r.nonexistence).count(),
                both: rows.iter().filter(|r| r.existence && r.nonexistence).count(),
                rows,
            };
            outcome(&Envelope::new(cmd.name(), cfg, sys.dom(), res), vec![("scan.csv".into(), csv)])
        }
        Command::ValidateGreen => {
            let sys = build::<T>(cfg)?;
            let mut entries = Vec::new();
            for k in 0..sys.m() {
                if sys.green_owner(k) < k {
                    continue;
                }
                let bounds = validate_bounds(sys.green(k), cfg.constants.sources, cfg.constants.exclusion).map_err(AnalysisError::from)?;
                entries.push(GreenEntry { k: k + 1, bounds });
            }
            let ok = entries.iter().all(|e| e.bounds.integral_estimates_hold);
            let env = Envelope::new(cmd.name(), cfg, sys.dom(), entries).with_verdict(ok, vec![]);
            outcome(&env, vec![])
        }
        Command::Reproduce(Example::Example41) => reproduce41::<T>(cfg, &opts),
        Command::Reproduce(Example::Example42) => reproduce42::<T>(cfg, &opts),
    }
}

fn solve<T: Real>(sys: &System<T>, cfg: &RunConfig, start: &Start) -> Result<FixedPointResult<T>, RunError> {
    let m = sys.m();
    let rho = cfg.radii.as_ref().map(|r| r.rho.clone()).unwrap_or_else(|| vec![1.0; m]);
    let eigen;
    let seed = match start {
        Start::Eigen => {
            eigen = principal_eigenpair(sys.green(0), T::lit(cfg.constants.eigen_tol), cfg.constants.eigen_max_iter).map_err(AnalysisError::from)?;
            let scale = cfg
                .radii
                .as_ref()
                .map(|r| r.rho0.unwrap_or(0.5 * r.min_rho()))
                .unwrap_or(1.0);
            Some((scale, &eigen.phi))
        }
        _ => None,
    };
    let u0 = initial_fields(sys, start, &rho, seed)?;
    let mut opts = cfg.solve.options();
    if let Some(r) = &cfg.radii {
        if let Some(r0) = r.rho0 {
            opts.radii = Some((r.rho.clone(), r0));
        }
    }
    Ok(fixed_point_iterate(sys, u0, &opts)?)
}

/// A published constant next to its computed counterpart.
#[derive(Serialize)]
struct Comparison {
    quantity: String,
    reference: f64,
    computed: f64,
    relative_difference: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn cmp(quantity: impl Into<String>, reference: f64, computed: f64, note: Option<&str>) -> Comparison {
    Comparison {
        quantity: quantity.into(),
        reference,
        computed,
        relative_difference: (computed - reference) / reference.abs(),
        note: note.map(str::to_string),
    }
}

const G1_NOTE: &str = "the reference value corresponds to (1-|x|^2)/2; the solution of -Laplace u = 1 on the unit ball in R^3 is (1-|x|^2)/6";

#[derive(Serialize)]
struct Reproduce41 {
    comparisons: Vec<Comparison>,
    report: ExistenceReport,
    /// Verdict with `lambda_1` scaled by 100.
    scaled_lambda1_verdict: bool,
    scaled_lambda1_failed: Vec<String>,
}

fn reproduce41<T: Real>(cfg: &RunConfig, opts: &AnalysisOptions) -> Result<Outcome, RunError> {
    let r = radii(cfg)?;
    let sys = build::<T>(cfg)?;
    let consts = compute_constants(&sys, opts)?;
    let prep = ExistencePrep::new(&sys.spec, &r, &consts, &opts.search)?;
    let lam = sys.spec.lambdas();
    let eta = sys.spec.etas();
    let rep = prep.evaluate(&lam, &eta)?;
    let mut scaled = lam.clone();
    scaled[0] *= 100.0;
    let big = prep.evaluate(&scaled, &eta)?;
    let rho = r.rho[0];
    let mut c = vec![
        cmp("M_1", rho.exp() * (1.0 + PI / 6.0), prep.m[0].value, None),
        cmp("M_2", 16.0, prep.m[1].value, None),
        cmp("H_1", 2.0 * rho, prep.h[0].value, None),
        cmp("H_2", 2.0 * PI * PI / 3.0, prep.h[1].value, None),
        cmp("||G_1(1)||", 0.5, consts[0].g1_sup, Some(G1_NOTE)),
        cmp("||gamma_1||", 1.0, consts[0].gamma_sup, None),
    ];
    for (l, g) in consts[0].deriv.iter().enumerate() {
        c.push(cmp(format!("G_1,{}", l + 1), 4.0, *g, Some("the reference value is an upper bound")));
    }
    let res = Reproduce41 {
        comparisons: c,
        scaled_lambda1_verdict: big.verdict,
        scaled_lambda1_failed: big.inequalities.iter().filter(|i| !i.pass).map(|i| i.name.clone()).collect(),
        report: rep,
    };
    let env = Envelope::new(Command::Reproduce(Example::Example41).name(), cfg, sys.dom(), &res)
        .with_verdict(res.report.verdict, res.report.inequalities.clone());
    outcome(&env, vec![])
}

#[derive(Serialize)]
struct Trial {
    seed: u64,
    classification: ellipcert::solver::Classification,
    iterations: usize,
    sup_norm: f64,
}

#[derive(Serialize)]
struct Reproduce42 {
    comparisons: Vec<Comparison>,
    report: NonexistenceReport,
    /// Existence/non-existence boundary of the scan: `eta = (1 - lambda * tau_k ||G_k(1)||) / (xi_k ||gamma_k||)`.
    boundary_slope: f64,
    boundary_intercept: f64,
    scan_points: usize,
    solver_trials: Vec<Trial>,
}

fn reproduce42<T: Real>(cfg: &RunConfig, opts: &AnalysisOptions) -> Result<Outcome, RunError> {
    let r = radii(cfg)?;
    let sys = build::<T>(cfg)?;
    let consts = compute_constants(&sys, opts)?;
    let ne = NonexistencePrep::new(&sys.spec, &r, &consts, &opts.search)?;
    let lam = sys.spec.lambdas();
    let eta = sys.spec.etas();
    let rep = ne.evaluate(&lam, &eta);
    let tau1_note = "the minimal constant is 1 - 1/e; the reference value 1 is valid but not minimal";
    let c = vec![
        cmp("tau_1", 1.0, ne.tau[0].certified, Some(tau1_note)),
        cmp("tau_2", 4.0, ne.tau[1].certified, None),
        cmp("xi_1", 4.0 * PI / 3.0, ne.xi[0].certified, None),
        cmp("xi_2", 1.0, ne.xi[1].certified, None),
        cmp("||G_1(1)||", 0.5, consts[0].g1_sup, Some(G1_NOTE)),
        cmp("||gamma_1||", 1.0, consts[0].gamma_sup, None),
    ];
    let mut artifacts = Vec::new();
    let grid = cfg.scan.clone();
    let k = grid.as_ref().map(|g| g.k).unwrap_or(0);
    let scan_points = match &grid {
        Some(g) => {
            let ex = ExistencePrep::new(&sys.spec, &r, &consts, &opts.search)?;
            let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).max(cfg.threads);
            let rows = scan_region(&ex, &ne, &lam, &eta, g, threads)?;
            artifacts.push(("region.csv".to_string(), scan_csv(&rows)));
            rows.len()
        }
        None => 0,
    };
    let mut trials = Vec::new();
    for seed in 0..10u64 {
        let res = solve(&sys, cfg, &Start::Random(seed))?;
        trials.push(Trial {
            seed,
            classification: res.classification,
            iterations: res.iterations,
            sup_norm: res.sup_norm,
        });
    }
    let res = Reproduce42 {
        comparisons: c,
        boundary_slope: -ne.tau[k].certified * consts[k].g1_sup / (ne.xi[k].certified * consts[k].gamma_sup),
        boundary_intercept: 1.0 / (ne.xi[k].certified * consts[k].gamma_sup),
        scan_points,
        solver_trials: trials,
        report: rep,
    };
    let env = Envelope::new(Command::Reproduce(Example::Example42).name(), cfg, sys.dom(), &res)
        .with_verdict(res.report.verdict, res.report.inequalities.clone());
    outcome(&env, artifacts)
}
