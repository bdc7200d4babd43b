//! Running configured scenarios: building the discrete problem, writing
//! snapshots and diagnostics, and evaluating the configured checks.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::coefficients::{
    check_assumptions, check_longtime_condition, find_gamma, transform, AssumptionBounds, CoefficientError,
    LongTimeCondition, SampleBox, TransformedModel,
};
use crate::config::{ConfigError, FieldSpec, GammaChoice, LawSpec, ScenarioConfig};
use crate::diagnostics::{
    apriori_scaling_check, homogenization_metric, lyapunov_decay_check, mass_balance_check, DiagnosticsRecord,
    ScalingQuantities, CSV_HEADER, ESTIMATES_HEADER,
};
use crate::discretization::{assemble_mass, BoundaryData, DiscretizationError, Mesh};
use crate::linalg::dot;
use crate::solver::{compute_flux, reconstruct_sigma, run_observed, InitialData, SolverError, State};

/// Header of the nodal snapshot file.
pub const SNAPSHOT_HEADER: &str = "x,u,varsigma,sigma";
/// Header of the element flux file; `x_mid` is the cell midpoint.
pub const FLUX_HEADER: &str = "x_mid,flux";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}, line {line}: {message}")]
    Snapshot { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Coefficient(#[from] CoefficientError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Solver(SolverError::InvalidConfig(_) | SolverError::InconsistentInitialData { .. }) => 2,
            ScenarioError::Solver(_) => 3,
            ScenarioError::Coefficient(CoefficientError::NonSmooth { .. }) => 3,
            _ => 2,
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> ScenarioError {
    ScenarioError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Columns of a nodal snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub varsigma: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Writes `path` with columns `x,u,varsigma,sigma` and, next to it,
/// `<stem>_flux.csv` with the element fluxes at cell midpoints.
pub fn write_snapshot(state: &State, mesh: &Mesh, model: &TransformedModel, path: &Path) -> Result<(), ScenarioError> {
    state.check(mesh).map_err(ScenarioError::Solver)?;
    let sigma = reconstruct_sigma(state, model);
    let mut out = String::with_capacity(64 * mesh.node_count());
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for i in 0..mesh.node_count() {
        let _ = writeln!(out, "{:e},{:e},{:e},{:e}", mesh.nodes()[i], state.u[i], state.varsigma[i], sigma[i]);
    }
    fs::write(path, out).map_err(|e| io_error(path, e))?;

    let flux = compute_flux(state, mesh, model)?;
    let mut out = String::from(FLUX_HEADER);
    out.push('\n');
    for (x, j) in mesh.midpoints().iter().zip(&flux) {
        let _ = writeln!(out, "{x:e},{j:e}");
    }
    let flux_path = flux_path(path);
    fs::write(&flux_path, out).map_err(|e| io_error(&flux_path, e))
}

fn flux_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_flux.csv"))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let bad = |line: usize, message: String| ScenarioError::Snapshot { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SNAPSHOT_HEADER => {}
        _ => return Err(bad(1, format!("expected header `{SNAPSHOT_HEADER}`"))),
    }
    let mut snap = Snapshot { x: Vec::new(), u: Vec::new(), varsigma: Vec::new(), sigma: Vec::new() };
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(idx + 1, e.to_string()))?;
        if cols.len() != 4 {
            return Err(bad(idx + 1, format!("expected 4 columns, found {}", cols.len())));
        }
        snap.x.push(cols[0]);
        snap.u.push(cols[1]);
        snap.varsigma.push(cols[2]);
        snap.sigma.push(cols[3]);
    }
    Ok(snap)
}

fn field_values(spec: &FieldSpec, mesh: &Mesh, column: &str) -> Result<Vec<f64>, ScenarioError> {
    let l = mesh.length();
    Ok(match spec {
        FieldSpec::Constant(c) => vec![*c; mesh.node_count()],
        FieldSpec::Cosine { mean, amplitude, mode } => mesh
            .nodes()
            .iter()
            .map(|&x| mean + amplitude * (*mode as f64 * std::f64::consts::PI * x / l).cos())
            .collect(),
        FieldSpec::Step { left, right, position } => {
            mesh.nodes().iter().map(|&x| if x < *position { *left } else { *right }).collect()
        }
        FieldSpec::File(path) => {
            let snap = read_snapshot(path)?;
            if snap.x.len() != mesh.node_count() {
                return Err(ScenarioError::Snapshot {
                    path: path.clone(),
                    line: 0,
                    message: format!("has {} nodes but the mesh has {}", snap.x.len(), mesh.node_count()),
                });
            }
            if let Some(i) = snap.x.iter().zip(mesh.nodes()).position(|(a, b)| (a - b).abs() > 1e-9 * l) {
                return Err(ScenarioError::Snapshot {
                    path: path.clone(),
                    line: i + 2,
                    message: format!("node x = {} does not match the mesh node {}", snap.x[i], mesh.nodes()[i]),
                });
            }
            if column == "u" {
                snap.u
            } else {
                snap.sigma
            }
        }
    })
}

/// The discrete problem described by a config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub mesh: Mesh,
    pub model: TransformedModel,
    pub boundary: BoundaryData,
    pub initial: InitialData,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let mesh = Mesh::new(config.length, config.cells)?;
        let model = transform(config.model.physical());
        let u0 = field_values(&config.u0, &mesh, "u")?;
        let sigma0 = field_values(&config.sigma0, &mesh, "sigma")?;
        let initial = InitialData::new(&model, u0, sigma0)?;
        config.solver_config().validate()?;
        Ok(Self { config: config.clone(), mesh, model, boundary: config.boundary(), initial })
    }

    /// The sample box for coefficient checks: the configured one, or the
    /// range of the initial data otherwise.
    pub fn sample_box(&self) -> SampleBox {
        if let Some(lt) = &self.config.longtime {
            return lt.sample_box;
        }
        let range = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                [lo, hi]
            } else {
                [lo - 0.5, hi + 0.5]
            }
        };
        SampleBox::new(
            [0.0, self.config.t_end],
            [0.0, self.config.length],
            range(&self.initial.u0),
            range(&self.initial.varsigma0),
        )
    }

    fn samples(&self) -> usize {
        self.config.longtime.as_ref().map_or(9, |lt| lt.samples)
    }

    pub fn check_assumptions(&self) -> Result<AssumptionBounds, ScenarioError> {
        Ok(check_assumptions(&self.model, &self.sample_box(), self.samples())?)
    }

    /// Evaluates the long-time condition when a `longtime` section exists.
    pub fn longtime_condition(&self) -> Option<Result<LongTimeCondition, CoefficientError>> {
        let lt = self.config.longtime.as_ref()?;
        Some(match &lt.gamma {
            GammaChoice::Fixed(g) => check_longtime_condition(&self.model, *g, &lt.sample_box, lt.samples),
            GammaChoice::Grid(grid) => find_gamma(&self.model, &lt.sample_box, grid, lt.samples),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub verdict: Verdict,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Self { name, verdict: if pass { Verdict::Pass } else { Verdict::Fail }, detail }
    }
}

/// A qualitative pattern looked for in a run; informational only.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub name: &'static str,
    pub detected: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub name: String,
    pub steps: usize,
    pub final_time: f64,
    pub final_mass: f64,
    pub final_metric: f64,
    /// Weight `Γ` of the recorded Lyapunov functional.
    pub gamma: f64,
    pub longtime: Option<LongTimeCondition>,
    pub checks: Vec<CheckOutcome>,
    pub signatures: Vec<Signature>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub final_state: State,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.name);
        let _ = writeln!(s, "steps: {}", self.steps);
        let _ = writeln!(s, "final time: {:e}", self.final_time);
        let _ = writeln!(s, "final mass: {:e}", self.final_mass);
        let _ = writeln!(s, "final homogenization metric: {:e}", self.final_metric);
        let _ = writeln!(s, "lyapunov weight Gamma: {:e}", self.gamma);
        if let Some(lt) = &self.longtime {
            let _ = writeln!(s, "long-time condition: Gamma = {:e}, Gamma_0 = {:e}", lt.gamma, lt.gamma_0);
        }
        for c in &self.checks {
            let verdict = if c.verdict == Verdict::Pass { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "check {}: {verdict} ({})", c.name, c.detail);
        }
        for g in &self.signatures {
            let _ = writeln!(s, "{} signature detected: {} ({})", g.name, if g.detected { "yes" } else { "no" }, g.detail);
        }
        let _ = writeln!(s, "verdict: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

/// Streaming statistics gathered from every step of a run.
struct Observations {
    first_below: Option<f64>,
    homogenize_tol: Option<f64>,
    /// `(t, x, u)` for every interior node extremum: the largest and smallest
    /// interior values seen.
    interior_max: (f64, f64, f64),
    interior_min: (f64, f64, f64),
    box_exit: Option<(f64, f64, f64)>,
    front: Vec<(f64, f64)>,
    track_front: bool,
}

fn front_position(state: &State, mesh: &Mesh) -> Option<f64> {
    let u = &state.u;
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    // no front once the far end has started to fill
    if !(hi - lo > 1e-6) || u[u.len() - 1] - lo > 0.1 * (hi - lo) {
        return None;
    }
    let level = 0.5 * (hi + lo);
    let x = mesh.nodes();
    (0..u.len() - 1).rev().find(|&i| u[i] >= level && u[i + 1] < level).map(|i| {
        let s = (u[i] - level) / (u[i] - u[i + 1]);
        x[i] + s * (x[i + 1] - x[i])
    })
}

/// Least-squares fits `x ≈ a·t` and `x ≈ b·√t`; returns the residual sums.
fn front_fit(samples: &[(f64, f64)]) -> Option<(f64, f64, f64, f64)> {
    if samples.len() < 3 {
        return None;
    }
    let fit = |g: &dyn Fn(f64) -> f64| {
        let num: f64 = samples.iter().map(|(t, x)| g(*t) * x).sum();
        let den: f64 = samples.iter().map(|(t, _)| g(*t) * g(*t)).sum();
        let c = num / den;
        let res: f64 = samples.iter().map(|(t, x)| (x - c * g(*t)).powi(2)).sum();
        (c, res)
    };
    let (a, res_lin) = fit(&|t| t);
    let (b, res_sqrt) = fit(&|t: f64| t.sqrt());
    Some((a, res_lin, b, res_sqrt))
}

fn analytic_check(sc: &Scenario, trajectory: &[State], tol: f64) -> CheckOutcome {
    let cfg = &sc.config;
    let model = &cfg.model;
    let (LawSpec::Constant(d), LawSpec::Constant(e), LawSpec::Constant(m)) = (&model.d0.law, &model.e0.law, &model.m0.law)
    else {
        return CheckOutcome::new("analytic", false, "needs constant D0, E0 and M0".into());
    };
    let FieldSpec::Cosine { mean, amplitude, mode } = cfg.u0 else {
        return CheckOutcome::new("analytic", false, "needs a cosine initial concentration".into());
    };
    if *e != 0.0 || *m != 0.0 || !sc.boundary.is_zero() {
        return CheckOutcome::new("analytic", false, "needs E0 = M0 = 0 and zero influx".into());
    }
    let k = mode as f64 * std::f64::consts::PI / cfg.length;
    let mass = assemble_mass(&sc.mesh);
    let mut worst: (f64, f64) = (0.0, 0.0);
    for s in trajectory {
        let decay = (-d * k * k * s.t).exp();
        let err: Vec<f64> =
            sc.mesh.nodes().iter().zip(&s.u).map(|(&x, &u)| u - (mean + amplitude * decay * (k * x).cos())).collect();
        let e = dot(&err, &mass.matvec(&err)).max(0.0).sqrt();
        if e >= worst.0 {
            worst = (e, s.t);
        }
    }
    CheckOutcome::new(
        "analytic",
        worst.0 <= tol,
        format!("max L2 error {:e} at t = {:e} over {} output times, tolerance {tol:e}", worst.0, worst.1, trajectory.len()),
    )
}

/// Runs a scenario and, if `out` is given, writes `diagnostics.csv`,
/// `estimates.csv`, `snapshot_<step>.csv` (with `snapshot_<step>_flux.csv`)
/// and `summary.txt` there.
pub fn run_scenario(config: &ScenarioConfig, out: Option<&Path>) -> Result<ScenarioReport, ScenarioError> {
    let sc = Scenario::build(config)?;
    let cfg = &sc.config;
    let mut checks = Vec::new();

    let longtime = match sc.longtime_condition() {
        None => None,
        Some(Ok(lt)) => {
            checks.push(CheckOutcome::new(
                "longtime-condition",
                true,
                format!("Gamma = {:e}, Gamma_0 = {:e}", lt.gamma, lt.gamma_0),
            ));
            Some(lt)
        }
        Some(Err(e)) => {
            checks.push(CheckOutcome::new("longtime-condition", false, e.to_string()));
            None
        }
    };
    let gamma = longtime.as_ref().map_or_else(
        || match cfg.longtime.as_ref().map(|l| &l.gamma) {
            Some(GammaChoice::Fixed(g)) => *g,
            _ => 1.0,
        },
        |lt| lt.gamma,
    );

    let n = sc.mesh.node_count();
    let verified_box = cfg.longtime.as_ref().map(|l| l.sample_box);
    let mut obs = Observations {
        first_below: None,
        homogenize_tol: cfg.checks.homogenize_tol,
        interior_max: (0.0, 0.0, f64::NEG_INFINITY),
        interior_min: (0.0, 0.0, f64::INFINITY),
        box_exit: None,
        front: Vec::new(),
        track_front: cfg.checks.front,
    };
    let output = run_observed(&sc.initial, &sc.mesh, &sc.model, &sc.boundary, &cfg.solver_config(), gamma, |step, s| {
        if let Some(tol) = obs.homogenize_tol {
            if obs.first_below.is_none() && homogenization_metric(&s.u, &sc.mesh) < tol {
                obs.first_below = Some(s.t);
            }
        }
        if step > 0 {
            for i in 1..n - 1 {
                let x = sc.mesh.nodes()[i];
                if s.u[i] > obs.interior_max.2 {
                    obs.interior_max = (s.t, x, s.u[i]);
                }
                if s.u[i] < obs.interior_min.2 {
                    obs.interior_min = (s.t, x, s.u[i]);
                }
            }
        }
        if let (Some(b), None) = (&verified_box, obs.box_exit) {
            let inside = |v: f64, iv: [f64; 2]| v >= iv[0] && v <= iv[1];
            if let Some(i) = (0..n).find(|&i| !(inside(s.u[i], b.u) && inside(s.varsigma[i], b.s))) {
                obs.box_exit = Some((s.t, s.u[i], s.varsigma[i]));
            }
        }
        if obs.track_front && step > 0 {
            if let Some(x) = front_position(s, &sc.mesh) {
                obs.front.push((s.t, x));
            }
        }
    })?;
    let series = &output.diagnostics;
    let last = *series.last().expect("series holds the initial record");
    let final_state = output.final_state().clone();
    let final_metric = homogenization_metric(&final_state.u, &sc.mesh);

    if let Some(tol) = cfg.checks.analytic_tol {
        checks.push(analytic_check(&sc, &output.trajectory, tol));
    }
    if let Some(tol) = cfg.checks.mass_tol {
        checks.push(match mass_balance_check(series, &sc.boundary, tol) {
            Ok(r) => CheckOutcome::new(
                "mass-balance",
                true,
                format!("initial {:e}, terminal {:e}, influx {:e}, max defect {:e}", r.initial, r.terminal, r.influx_total, r.max_defect),
            ),
            Err(e) => CheckOutcome::new("mass-balance", false, e.to_string()),
        });
    }
    if let Some(tol) = cfg.checks.lyapunov_tol {
        let outcome = match (&longtime, obs.box_exit) {
            (None, _) => CheckOutcome::new("lyapunov-decay", false, "long-time condition not verified".into()),
            (Some(_), Some((t, u, s))) => CheckOutcome::new(
                "lyapunov-decay",
                false,
                format!("trajectory left the verified box at t = {t:e} (u = {u:e}, varsigma = {s:e})"),
            ),
            (Some(lt), None) => match lyapunov_decay_check(series, lt, tol) {
                Ok(r) => CheckOutcome::new(
                    "lyapunov-decay",
                    true,
                    format!(
                        "{} steps, functional {:e} -> {:e}, largest step change {:e}, dissipation bound {:e}",
                        r.steps_checked, r.initial, r.terminal, r.max_increase, r.cum_grad_bound
                    ),
                ),
                Err(e) => CheckOutcome::new("lyapunov-decay", false, e.to_string()),
            },
        };
        checks.push(outcome);
    }
    if let Some(tol) = cfg.checks.homogenize_tol {
        checks.push(match obs.first_below {
            Some(t) => CheckOutcome::new("homogenization", true, format!("metric below {tol:e} at t = {t:e}")),
            None => CheckOutcome::new(
                "homogenization",
                false,
                format!("metric {final_metric:e} still above {tol:e} at t = {:e}", final_state.t),
            ),
        });
    }

    let equilibrium = last.mass / cfg.length;
    let mut signatures = Vec::new();
    if cfg.checks.overshoot {
        let (t, x, u) = obs.interior_max;
        signatures.push(Signature {
            name: "sorption overshoot",
            detected: u > equilibrium + 1e-6 * (1.0 + equilibrium.abs()),
            detail: format!("largest interior u {u:e} at t = {t:e}, x = {x:e}; terminal equilibrium {equilibrium:e}"),
        });
    }
    if cfg.checks.undershoot {
        let (t, x, u) = obs.interior_min;
        signatures.push(Signature {
            name: "desorption overshoot",
            detected: u < equilibrium - 1e-6 * (1.0 + equilibrium.abs()),
            detail: format!("smallest interior u {u:e} at t = {t:e}, x = {x:e}; terminal equilibrium {equilibrium:e}"),
        });
    }
    if cfg.checks.front {
        signatures.push(match front_fit(&obs.front) {
            Some((a, res_lin, b, res_sqrt)) => Signature {
                name: "case II front",
                detected: res_lin < res_sqrt,
                detail: format!(
                    "{} front samples; x = {a:e} t leaves residual {res_lin:e}, x = {b:e} sqrt(t) leaves {res_sqrt:e}",
                    obs.front.len()
                ),
            },
            None => Signature { name: "case II front", detected: false, detail: "no front found".into() },
        });
    }

    let report = ScenarioReport {
        name: cfg.name.clone(),
        steps: cfg.solver_config().steps(),
        final_time: final_state.t,
        final_mass: last.mass,
        final_metric,
        gamma,
        longtime,
        checks,
        signatures,
        diagnostics: output.diagnostics.clone(),
        final_state,
    };

    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        write_series(&dir.join("diagnostics.csv"), CSV_HEADER, series.iter().map(|r| r.csv_row()))?;
        write_series(&dir.join("estimates.csv"), ESTIMATES_HEADER, series.iter().map(|r| r.estimates_row()))?;
        for (state, step) in output.trajectory.iter().zip(&output.output_steps) {
            write_snapshot(state, &sc.mesh, &sc.model, &dir.join(format!("snapshot_{step}.csv")))?;
        }
        let summary = dir.join("summary.txt");
        fs::write(&summary, report.summary()).map_err(|e| io_error(&summary, e))?;
    }
    Ok(report)
}

fn write_series(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<(), ScenarioError> {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row);
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| io_error(path, e))
}

#[derive(Debug, Clone)]
pub struct EpsRun {
    pub epsilon: f64,
    pub quantities: ScalingQuantities,
    /// `L²` distance of the terminal concentration and stress to the
    /// unregularized run.
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct EpsScanReport {
    /// Sorted by decreasing `ε`.
    pub runs: Vec<EpsRun>,
    /// Ratio of the largest to the smallest `sup‖ς‖_{H¹}`.
    pub h1_spread: f64,
    pub checks: Vec<CheckOutcome>,
}

impl EpsScanReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn summary(&self) -> String {
        let mut s = String::from("epsilon,sup_h1_s,eps_h2_u,eps_xn_s,sup_l2_u,cum_grad_u,cum_dual_dt_u,distance_to_eps0\n");
        for r in &self.runs {
            let q = &r.quantities;
            let _ = writeln!(
                s,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.epsilon, q.sup_h1_s, q.eps_h2_u, q.eps_xn_s, q.sup_l2_u, q.cum_grad_u, q.cum_dual_dt_u, r.distance
            );
        }
        for c in &self.checks {
            let verdict = if c.verdict == Verdict::Pass { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "check {}: {verdict} ({})", c.name, c.detail);
        }
        s
    }
}

/// Runs the scenario at every `ε` of `eps_scan.values` plus `ε = 0`,
/// concurrently, and compares the estimate quantities across `ε`.
pub fn run_eps_scan(config: &ScenarioConfig, out: Option<&Path>) -> Result<EpsScanReport, ScenarioError> {
    let mut eps: Vec<f64> = config.eps_values.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let mut all = eps.clone();
    all.push(0.0);
    let results: Vec<Result<ScenarioReport, ScenarioError>> = all
        .par_iter()
        .map(|&e| {
            let mut cfg = config.clone();
            cfg.epsilon = e;
            cfg.name = format!("{}-eps{e:e}", config.name);
            cfg.checks = Default::default();
            let dir = out.map(|d| d.join(format!("eps_{e:e}")));
            run_scenario(&cfg, dir.as_deref())
        })
        .collect();
    let mut reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let baseline = reports.pop().expect("baseline run");
    let sc = Scenario::build(config)?;
    let mass = assemble_mass(&sc.mesh);
    let l2 = |a: &[f64], b: &[f64]| {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        dot(&d, &mass.matvec(&d)).max(0.0)
    };

    let mut runs = Vec::new();
    for (e, rep) in eps.iter().zip(&reports) {
        let quantities = ScalingQuantities::from_series(*e, &rep.diagnostics).map_err(SolverError::from)?;
        let distance = (l2(&rep.final_state.u, &baseline.final_state.u)
            + l2(&rep.final_state.varsigma, &baseline.final_state.varsigma))
        .sqrt();
        runs.push(EpsRun { epsilon: *e, quantities, distance });
    }

    let mut checks = Vec::new();
    let h1: Vec<f64> = runs.iter().map(|r| r.quantities.sup_h1_s).collect();
    let h1_max = h1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let h1_min = h1.iter().copied().fold(f64::INFINITY, f64::min);
    let h1_spread = h1_max / h1_min;
    checks.push(CheckOutcome::new(
        "sup-h1-stress",
        h1_spread <= 1.0 + config.eps_margin,
        format!("max/min of sup ||varsigma||_H1 across epsilon = {h1_spread:.6}"),
    ));
    let series: Vec<(f64, Vec<DiagnosticsRecord>)> =
        eps.iter().zip(&reports).map(|(e, r)| (*e, r.diagnostics.clone())).collect();
    checks.push(match apriori_scaling_check(&series, config.eps_margin) {
        Ok(_) => CheckOutcome::new(
            "apriori-scaling",
            true,
            format!("epsilon-weighted and sup quantities within {} of the largest-epsilon run", 1.0 + config.eps_margin),
        ),
        Err(e) => CheckOutcome::new("apriori-scaling", false, e.to_string()),
    });
    let monotone = runs.windows(2).all(|w| w[1].distance < w[0].distance);
    checks.push(CheckOutcome::new(
        "distance-to-unregularized",
        monotone,
        format!(
            "terminal distances {}",
            runs.iter().map(|r| format!("{:e}: {:e}", r.epsilon, r.distance)).collect::<Vec<_>>().join(", ")
        ),
    ));

    let report = EpsScanReport { runs, h1_spread, checks };
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let path = dir.join("eps_scan.txt");
        fs::write(&path, report.summary()).map_err(|e| io_error(&path, e))?;
    }
    Ok(report)
}

impl From<crate::diagnostics::DiagnosticsError> for ScenarioError {
    fn from(e: crate::diagnostics::DiagnosticsError) -> Self {
        ScenarioError::Solver(SolverError::Diagnostics(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::solver::State;

    #[test]
    fn snapshot_of_constant_state_has_constant_columns() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = Mesh::new(2.0, 4).unwrap();
        let model = transform(crate::coefficients::PhysicalCoefficients::fickian(1.0));
        let path = dir.path().join("snapshot_0.csv");
        write_snapshot(&State::new(0.0, vec![0.25; 5], vec![-1.5; 5]), &mesh, &model, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next(), Some("x,u,varsigma,sigma"));
        let snap = read_snapshot(&path).unwrap();
        assert!(snap.u.iter().all(|&v| v == 0.25));
        assert!(snap.varsigma.iter().all(|&v| v == -1.5));
        assert!(snap.sigma.iter().all(|&v| v == -1.5));
        let flux = fs::read_to_string(dir.path().join("snapshot_0_flux.csv")).unwrap();
        assert_eq!(flux.lines().next(), Some("x_mid,flux"));
        assert_eq!(flux.lines().nth(1), Some("2.5e-1,0e0"));
    }

    #[test]
    fn front_fit_prefers_the_right_law() {
        let lin: Vec<(f64, f64)> = (1..20).map(|k| (k as f64 * 0.1, 0.3 * k as f64 * 0.1)).collect();
        let (_, rl, _, rs) = front_fit(&lin).unwrap();
        assert!(rl < rs);
        let sq: Vec<(f64, f64)> = (1..20).map(|k| (k as f64 * 0.1, (k as f64 * 0.1).sqrt())).collect();
        let (_, rl, _, rs) = front_fit(&sq).unwrap();
        assert!(rs < rl);
    }

    #[test]
    fn missing_snapshot_is_an_io_error() {
        let cfg = parse_config(
            "mesh.N = 4\ntime.dt = 0.1\ntime.T_end = 0.1\ninitial.u0 = \"file\"\ninitial.u0.path = \"/nonexistent/snap.csv\"\n",
        )
        .unwrap();
        let err = run_scenario(&cfg, None).unwrap_err();
        assert!(matches!(err, ScenarioError::Io { .. }));
        assert_eq!(err.exit_code(), 2);
    }
}
