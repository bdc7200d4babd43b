//! Norms, energies and estimate monitors evaluated along a run.
//!
//! All `L²` norms are mass-matrix weighted and all gradient norms use the
//! element gradients of the P1 interpolant, so refining the mesh changes the
//! values only by quadrature error.

use thiserror::Error;

use crate::coefficients::LongTimeCondition;
use crate::discretization::{assemble_mass, helmholtz_form, lumped_mass, neumann_laplacian, BoundaryData, Mesh};
use crate::linalg::{dot, BandedLdl, BandedMatrix};
use crate::solver::State;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("Lyapunov weight Gamma must be positive, got {0}")]
    InvalidGamma(f64),
    #[error("field size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("Lyapunov functional increased at step {step} (t = {t}): {previous} -> {current}")]
    LyapunovIncrease { step: usize, t: f64, previous: f64, current: f64 },
    #[error("dissipation bound violated at step {step} (t = {t}): {quantity} = {value} exceeds {bound}")]
    DissipationBound { step: usize, t: f64, quantity: &'static str, value: f64, bound: f64 },
    #[error("mass balance violated at step {step} (t = {t}): mass {mass}, expected {expected}")]
    MassImbalance { step: usize, t: f64, mass: f64, expected: f64 },
    #[error("estimate `{quantity}` grows as epsilon decreases: {value} at epsilon = {epsilon} exceeds {bound}")]
    UnboundedGrowth { quantity: &'static str, epsilon: f64, value: f64, bound: f64 },
    #[error("empty diagnostics series")]
    EmptySeries,
}

/// Per-step monitor values. The first eleven fields form the documented
/// CSV layout; the remaining ones feed the regularization estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub l2_u: f64,
    pub h1semi_u: f64,
    pub l2_s: f64,
    pub h1semi_s: f64,
    /// `Γ²/2·‖u‖² + ½‖∇ς‖²`
    pub lyapunov: f64,
    /// `∫₀ᵗ ‖∇u‖²`, trapezoid in time.
    pub cum_grad_u: f64,
    pub cum_grad_s: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// `‖(I + L_h)u‖` in the lumped-mass norm (discrete `H²`).
    pub h2_u: f64,
    /// `‖(I + L_h)ς‖_{H¹}` (discrete `X_N`).
    pub xn_s: f64,
    pub cum_h2_u: f64,
    pub cum_xn_s: f64,
    /// Discrete dual norm of `(uⁿ − uⁿ⁻¹)/Δt`.
    pub dual_dt_u: f64,
    pub cum_dual_dt_u: f64,
}

pub const CSV_HEADER: &str = "t,mass,l2_u,h1semi_u,l2_s,h1semi_s,lyapunov,cum_grad_u,cum_grad_s,u_min,u_max";
pub const ESTIMATES_HEADER: &str = "t,h2_u,xn_s,cum_h2_u,cum_xn_s,dual_dt_u,cum_dual_dt_u";

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        [
            self.t,
            self.mass,
            self.l2_u,
            self.h1semi_u,
            self.l2_s,
            self.h1semi_s,
            self.lyapunov,
            self.cum_grad_u,
            self.cum_grad_s,
            self.u_min,
            self.u_max,
        ]
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
    }

    pub fn estimates_row(&self) -> String {
        [self.t, self.h2_u, self.xn_s, self.cum_h2_u, self.cum_xn_s, self.dual_dt_u, self.cum_dual_dt_u]
            .iter()
            .map(|v| format!("{v:e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// `‖ς‖_{H¹}`.
    pub fn h1_s(&self) -> f64 {
        self.l2_s.hypot(self.h1semi_s)
    }
}

/// Fixed per-mesh operators shared by every record.
#[derive(Debug, Clone)]
struct NormOperators {
    mass: BandedMatrix,
    stiffness: BandedMatrix,
    lumped: Vec<f64>,
    lap: BandedMatrix,
}

impl NormOperators {
    fn new(mesh: &Mesh) -> Self {
        let ones = vec![1.0; mesh.node_count()];
        Self {
            mass: assemble_mass(mesh),
            stiffness: crate::discretization::assemble_stiffness(mesh, &ones).expect("sizes match"),
            lumped: lumped_mass(mesh),
            lap: neumann_laplacian(mesh),
        }
    }

    fn l2_sq(&self, v: &[f64]) -> f64 {
        dot(v, &self.mass.matvec(v)).max(0.0)
    }

    fn h1semi_sq(&self, v: &[f64]) -> f64 {
        dot(v, &self.stiffness.matvec(v)).max(0.0)
    }

    fn shifted(&self, v: &[f64]) -> Vec<f64> {
        self.lap.matvec(v).iter().zip(v).map(|(a, b)| a + b).collect()
    }

    fn instantaneous(&self, state: &State, gamma: f64) -> DiagnosticsRecord {
        let u = &state.u;
        let s = &state.varsigma;
        let l2u = self.l2_sq(u);
        let gu = self.h1semi_sq(u);
        let l2s = self.l2_sq(s);
        let gs = self.h1semi_sq(s);
        let wu = self.shifted(u);
        let ws = self.shifted(s);
        let h2u: f64 = wu.iter().zip(&self.lumped).map(|(w, m)| m * w * w).sum();
        let xns = self.l2_sq(&ws) + self.h1semi_sq(&ws);
        DiagnosticsRecord {
            t: state.t,
            mass: dot(&self.lumped, u),
            l2_u: l2u.sqrt(),
            h1semi_u: gu.sqrt(),
            l2_s: l2s.sqrt(),
            h1semi_s: gs.sqrt(),
            lyapunov: 0.5 * gamma * gamma * l2u + 0.5 * gs,
            u_min: u.iter().copied().fold(f64::INFINITY, f64::min),
            u_max: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            h2_u: h2u.sqrt(),
            xn_s: xns.sqrt(),
            ..Default::default()
        }
    }
}

fn check_gamma(gamma: f64) -> Result<(), DiagnosticsError> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(DiagnosticsError::InvalidGamma(gamma))
    }
}

fn check_state(state: &State, mesh: &Mesh) -> Result<(), DiagnosticsError> {
    for len in [state.u.len(), state.varsigma.len()] {
        if len != mesh.node_count() {
            return Err(DiagnosticsError::SizeMismatch { expected: mesh.node_count(), got: len });
        }
    }
    Ok(())
}

/// Instantaneous record of one state; cumulative fields are zero.
pub fn record(state: &State, mesh: &Mesh, gamma: f64) -> Result<DiagnosticsRecord, DiagnosticsError> {
    check_gamma(gamma)?;
    check_state(state, mesh)?;
    Ok(NormOperators::new(mesh).instantaneous(state, gamma))
}

/// Accumulates a diagnostics series along a trajectory.
#[derive(Debug, Clone)]
pub struct Recorder {
    ops: NormOperators,
    helmholtz: BandedLdl,
    node_count: usize,
    gamma: f64,
    previous: Option<(DiagnosticsRecord, Vec<f64>)>,
    series: Vec<DiagnosticsRecord>,
}

impl Recorder {
    pub fn new(mesh: &Mesh, gamma: f64) -> Result<Self, DiagnosticsError> {
        check_gamma(gamma)?;
        Ok(Self {
            ops: NormOperators::new(mesh),
            helmholtz: helmholtz_form(mesh).factor_spd().expect("M_L + K is positive definite"),
            node_count: mesh.node_count(),
            gamma,
            previous: None,
            series: Vec::new(),
        })
    }

    pub fn push(&mut self, state: &State) -> Result<DiagnosticsRecord, DiagnosticsError> {
        for len in [state.u.len(), state.varsigma.len()] {
            if len != self.node_count {
                return Err(DiagnosticsError::SizeMismatch { expected: self.node_count, got: len });
            }
        }
        let mut rec = self.ops.instantaneous(state, self.gamma);
        if let Some((prev, prev_u)) = &self.previous {
            let dt = rec.t - prev.t;
            let trap = |a: f64, b: f64| 0.5 * dt * (a * a + b * b);
            rec.cum_grad_u = prev.cum_grad_u + trap(prev.h1semi_u, rec.h1semi_u);
            rec.cum_grad_s = prev.cum_grad_s + trap(prev.h1semi_s, rec.h1semi_s);
            rec.cum_h2_u = prev.cum_h2_u + trap(prev.h2_u, rec.h2_u);
            rec.cum_xn_s = prev.cum_xn_s + trap(prev.xn_s, rec.xn_s);
            if dt > 0.0 {
                let weighted: Vec<f64> =
                    state.u.iter().zip(prev_u).zip(&self.ops.lumped).map(|((a, b), m)| m * (a - b) / dt).collect();
                let z = self.helmholtz.solve(&weighted).expect("sizes match");
                rec.dual_dt_u = dot(&weighted, &z).max(0.0).sqrt();
            }
            rec.cum_dual_dt_u = prev.cum_dual_dt_u + dt * rec.dual_dt_u * rec.dual_dt_u;
        }
        self.previous = Some((rec, state.u.clone()));
        self.series.push(rec);
        Ok(rec)
    }

    pub fn series(&self) -> &[DiagnosticsRecord] {
        &self.series
    }

    pub fn into_series(self) -> Vec<DiagnosticsRecord> {
        self.series
    }
}

/// `‖u − ū‖` with `ū` the mass-weighted mean.
pub fn homogenization_metric(u: &[f64], mesh: &Mesh) -> f64 {
    let lumped = lumped_mass(mesh);
    let mean = dot(&lumped, u) / mesh.length();
    let dev: Vec<f64> = u.iter().map(|v| v - mean).collect();
    dot(&dev, &assemble_mass(mesh).matvec(&dev)).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub steps_checked: usize,
    pub initial: f64,
    pub terminal: f64,
    /// Largest single-step increase (negative when strictly decaying).
    pub max_increase: f64,
    pub cum_grad_bound: f64,
}

/// Checks the energy inequality of the long-time argument on a series
/// recorded with weight `lt.gamma`: the functional is non-increasing up to
/// `tol` per step, and the accumulated dissipation stays below its initial
/// value (with `tol` of slack per elapsed step).
pub fn lyapunov_decay_check(
    series: &[DiagnosticsRecord],
    lt: &LongTimeCondition,
    tol: f64,
) -> Result<DecayReport, DiagnosticsError> {
    let (gamma, gamma_0) = (lt.gamma, lt.gamma_0);
    check_gamma(gamma)?;
    let first = series.first().ok_or(DiagnosticsError::EmptySeries)?;
    let l0 = first.lyapunov;
    let g2 = gamma * gamma;
    let cum_bound = l0 / (gamma_0 * g2).min(gamma_0);
    let weight = gamma_0 * g2.min(1.0);
    let mut max_increase = f64::NEG_INFINITY;
    for (k, pair) in series.windows(2).enumerate() {
        let (prev, cur) = (&pair[0], &pair[1]);
        let step = k + 1;
        let increase = cur.lyapunov - prev.lyapunov;
        max_increase = max_increase.max(increase);
        if increase > tol {
            return Err(DiagnosticsError::LyapunovIncrease { step, t: cur.t, previous: prev.lyapunov, current: cur.lyapunov });
        }
        let slack = tol * step as f64;
        for (quantity, value) in [("cum_grad_u", cur.cum_grad_u), ("cum_grad_s", cur.cum_grad_s)] {
            if value > cum_bound + slack {
                return Err(DiagnosticsError::DissipationBound { step, t: cur.t, quantity, value, bound: cum_bound + slack });
            }
        }
        let combined = cur.lyapunov + weight * (cur.cum_grad_u + cur.cum_grad_s);
        if combined > l0 + slack {
            return Err(DiagnosticsError::DissipationBound {
                step,
                t: cur.t,
                quantity: "lyapunov + dissipation",
                value: combined,
                bound: l0 + slack,
            });
        }
    }
    Ok(DecayReport {
        steps_checked: series.len() - 1,
        initial: l0,
        terminal: series.last().map(|r| r.lyapunov).unwrap_or(l0),
        max_increase: if series.len() > 1 { max_increase } else { 0.0 },
        cum_grad_bound: cum_bound,
    })
}

/// Estimate quantities of one regularized run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingQuantities {
    pub epsilon: f64,
    /// `ε·Σ Δt ‖(I+L_h)u‖²`
    pub eps_h2_u: f64,
    /// `ε·Σ Δt ‖(I+L_h)ς‖²_{H¹}`
    pub eps_xn_s: f64,
    /// `sup_t ‖u‖²`
    pub sup_l2_u: f64,
    /// `Σ Δt ‖∇u‖²`
    pub cum_grad_u: f64,
    /// `sup_t ‖ς‖_{H¹}`
    pub sup_h1_s: f64,
    /// `Σ Δt ‖δₜu‖²_{−1}`
    pub cum_dual_dt_u: f64,
}

impl ScalingQuantities {
    pub fn from_series(epsilon: f64, series: &[DiagnosticsRecord]) -> Result<Self, DiagnosticsError> {
        let last = series.last().ok_or(DiagnosticsError::EmptySeries)?;
        Ok(Self {
            epsilon,
            eps_h2_u: epsilon * last.cum_h2_u,
            eps_xn_s: epsilon * last.cum_xn_s,
            sup_l2_u: series.iter().map(|r| r.l2_u * r.l2_u).fold(0.0, f64::max),
            cum_grad_u: last.cum_grad_u,
            sup_h1_s: series.iter().map(|r| r.h1_s()).fold(0.0, f64::max),
            cum_dual_dt_u: last.cum_dual_dt_u,
        })
    }

    /// The quantities compared across `ε`: the `ε`-weighted `H²` sums and
    /// the sup-in-time norms.
    fn checked(&self) -> [(&'static str, f64); 4] {
        [
            ("eps_h2_u", self.eps_h2_u),
            ("eps_xn_s", self.eps_xn_s),
            ("sup_l2_u", self.sup_l2_u),
            ("sup_h1_s", self.sup_h1_s),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    /// Sorted by decreasing `ε`; the first entry is the reference run.
    pub runs: Vec<ScalingQuantities>,
    pub margin: f64,
}

/// Checks that the `ε`-weighted `H²` sums and the sup-in-time norms of
/// every run stay below `(1 + margin)` times their values on the
/// largest-`ε` run.
pub fn apriori_scaling_check(
    runs: &[(f64, Vec<DiagnosticsRecord>)],
    margin: f64,
) -> Result<ScalingReport, DiagnosticsError> {
    let mut quantities =
        runs.iter().map(|(eps, series)| ScalingQuantities::from_series(*eps, series)).collect::<Result<Vec<_>, _>>()?;
    quantities.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    if let Some(reference) = quantities.first() {
        let reference = reference.checked();
        for run in &quantities[1..] {
            for ((quantity, value), (_, base)) in run.checked().iter().zip(reference.iter()) {
                let bound = (1.0 + margin) * base;
                if *value > bound {
                    return Err(DiagnosticsError::UnboundedGrowth { quantity, epsilon: run.epsilon, value: *value, bound });
                }
            }
        }
    }
    Ok(ScalingReport { runs: quantities, margin })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub initial: f64,
    pub terminal: f64,
    pub influx_total: f64,
    pub max_defect: f64,
}

/// Checks `|mass(t_k) − mass(0) − Σ Δt·(φ_L + φ_R)(t_j)| ≤ tol·(1 + |mass(0)|)`
/// on a per-step series, with the influx evaluated at the end of each step
/// as in the time discretization.
pub fn mass_balance_check(
    series: &[DiagnosticsRecord],
    bd: &BoundaryData,
    tol: f64,
) -> Result<MassReport, DiagnosticsError> {
    let first = series.first().ok_or(DiagnosticsError::EmptySeries)?;
    let m0 = first.mass;
    let allowed = tol * (1.0 + m0.abs());
    let mut influx = 0.0;
    let mut max_defect: f64 = 0.0;
    for (k, pair) in series.windows(2).enumerate() {
        let cur = &pair[1];
        influx += (cur.t - pair[0].t) * bd.total(cur.t);
        let expected = m0 + influx;
        let defect = (cur.mass - expected).abs();
        max_defect = max_defect.max(defect);
        if defect > allowed {
            return Err(DiagnosticsError::MassImbalance { step: k + 1, t: cur.t, mass: cur.mass, expected });
        }
    }
    Ok(MassReport { initial: m0, terminal: series.last().map(|r| r.mass).unwrap_or(m0), influx_total: influx, max_defect })
}
