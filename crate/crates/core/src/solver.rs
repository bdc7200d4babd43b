//! Semi-implicit time stepping of the coupled concentration–stress system.
//!
//! Each step lags the coefficients to the previous time level, solves the
//! weak concentration equation implicitly in the diffusion term, then
//! updates the transformed stress node by node using the new
//! concentration. With `epsilon > 0` both updates gain the fourth-order
//! smoothing term `ε(I + L_h)²`.

use thiserror::Error;

use crate::coefficients::{Point, TransformedModel};
use crate::diagnostics::{DiagnosticsError, DiagnosticsRecord, Recorder};
use crate::discretization::{
    assemble_flux_vector, assemble_stiffness, boundary_functional, regularization_form, BoundaryData,
    DiscreteOperators, DiscretizationError, Mesh,
};
use crate::linalg::{BandedMatrix, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("linear system at step {step} (t = {t}) is not positive definite; the diffusion coefficient may have lost ellipticity: {source}")]
    NotPositiveDefinite { step: usize, t: f64, source: LinalgError },
    #[error("stress update at step {step} (t = {t}) is singular at node {node}: 1 - dt*beta1 = {denominator}")]
    SingularStressUpdate { step: usize, t: f64, node: usize, denominator: f64 },
    #[error("explicit stress update is unstable: dt*max|beta1| = {value} >= 1")]
    StabilityGuard { value: f64 },
    #[error("non-finite value in {field} at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64, field: &'static str },
    #[error("initial stress is inconsistent with the change of variables: round-trip error {error}")]
    InconsistentInitialData { error: f64 },
}

/// Concentration `u` and transformed stress `ς` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub varsigma: Vec<f64>,
}

impl State {
    pub fn new(t: f64, u: Vec<f64>, varsigma: Vec<f64>) -> Self {
        Self { t, u, varsigma }
    }

    pub fn check(&self, mesh: &Mesh) -> Result<(), SolverError> {
        mesh.check_field(&self.u)?;
        mesh.check_field(&self.varsigma)?;
        Ok(())
    }

    fn first_non_finite(&self) -> Option<&'static str> {
        if !self.u.iter().all(|v| v.is_finite()) {
            Some("u")
        } else if !self.varsigma.iter().all(|v| v.is_finite()) {
            Some("varsigma")
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StressScheme {
    /// Backward Euler in the decay term: `ς' = β₁ς + γu` with `β₁ς` implicit.
    #[default]
    ImplicitDecay,
    /// Forward Euler; requires `Δt·max|β₁| < 1`.
    Explicit,
}

impl StressScheme {
    pub fn name(self) -> &'static str {
        match self {
            StressScheme::ImplicitDecay => "implicit-decay",
            StressScheme::Explicit => "explicit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "implicit-decay" => Some(StressScheme::ImplicitDecay),
            "explicit" => Some(StressScheme::Explicit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Regularization strength; zero disables it.
    pub epsilon: f64,
    pub stress_scheme: StressScheme,
    /// Keep every `output_every`-th state in the trajectory (plus the last).
    pub output_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 1.0, epsilon: 0.0, stress_scheme: StressScheme::ImplicitDecay, output_every: 100 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolverError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end == 0.0 || self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "T_end must be 0 or at least dt = {}, got {}",
                self.dt, self.t_end
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(SolverError::InvalidConfig(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if self.output_every == 0 {
            return Err(SolverError::InvalidConfig("output_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps; `T_end` is snapped to the nearest multiple of `dt`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Initial concentration and stress, with the transformed stress derived
/// from the physical one.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub sigma0: Vec<f64>,
    pub varsigma0: Vec<f64>,
}

impl InitialData {
    pub fn new(model: &TransformedModel, u0: Vec<f64>, sigma0: Vec<f64>) -> Result<Self, SolverError> {
        if u0.len() != sigma0.len() {
            return Err(SolverError::InvalidConfig(format!(
                "u0 has {} entries but sigma0 has {}",
                u0.len(),
                sigma0.len()
            )));
        }
        if !u0.iter().chain(&sigma0).all(|v| v.is_finite()) {
            return Err(SolverError::InvalidConfig("initial data must be finite".into()));
        }
        let varsigma0: Vec<f64> = u0.iter().zip(&sigma0).map(|(&u, &s)| model.varsigma(u, s)).collect();
        let error = u0
            .iter()
            .zip(&varsigma0)
            .zip(&sigma0)
            .map(|((&u, &v), &s)| (model.sigma(u, v) - s).abs() / (1.0 + s.abs()))
            .fold(0.0, f64::max);
        if error > 1e-12 {
            return Err(SolverError::InconsistentInitialData { error });
        }
        Ok(Self { u0, sigma0, varsigma0 })
    }

    pub fn state(&self) -> State {
        State::new(0.0, self.u0.clone(), self.varsigma0.clone())
    }
}

/// Physical stress `σ = ς + ∫₀ᵘν₀` at every node.
pub fn reconstruct_sigma(state: &State, model: &TransformedModel) -> Vec<f64> {
    state.u.iter().zip(&state.varsigma).map(|(&u, &s)| model.sigma(u, s)).collect()
}

/// Element-wise flux `J = −D₀u′ − E₀σ′ + M₀u` with element-averaged
/// coefficients and `u`.
pub fn compute_flux(state: &State, mesh: &Mesh, model: &TransformedModel) -> Result<Vec<f64>, SolverError> {
    state.check(mesh)?;
    let phys = model.physical();
    let sigma = reconstruct_sigma(state, model);
    let pts: Vec<Point> =
        mesh.nodes().iter().zip(&state.u).zip(&sigma).map(|((&x, &u), &s)| Point::new(state.t, x, u, s)).collect();
    let d0: Vec<f64> = pts.iter().map(|&p| phys.d0.value(p)).collect();
    let e0: Vec<f64> = pts.iter().map(|&p| phys.e0.value(p)).collect();
    let m0: Vec<f64> = pts.iter().map(|&p| phys.m0.value(p)).collect();
    let h = mesh.h();
    Ok((0..mesh.cells())
        .map(|e| {
            let avg = |v: &[f64]| 0.5 * (v[e] + v[e + 1]);
            let du = (state.u[e + 1] - state.u[e]) / h;
            let ds = (sigma[e + 1] - sigma[e]) / h;
            -avg(&d0) * du - avg(&e0) * ds + avg(&m0) * avg(&state.u)
        })
        .collect())
}

/// Nodal transformed coefficients at a state.
#[derive(Debug, Clone)]
struct NodalFields {
    d: Vec<f64>,
    e: Vec<f64>,
    f: Vec<f64>,
    beta1: Vec<f64>,
    gamma: Vec<f64>,
}

impl NodalFields {
    fn at(state: &State, mesh: &Mesh, model: &TransformedModel) -> Self {
        let n = mesh.node_count();
        let mut out = Self {
            d: Vec::with_capacity(n),
            e: Vec::with_capacity(n),
            f: Vec::with_capacity(n),
            beta1: Vec::with_capacity(n),
            gamma: Vec::with_capacity(n),
        };
        for ((&x, &u), &s) in mesh.nodes().iter().zip(&state.u).zip(&state.varsigma) {
            let c = model.eval(Point::new(state.t, x, u, s));
            out.d.push(c.d);
            out.e.push(c.e);
            out.f.push(c.f);
            out.beta1.push(c.beta1);
            out.gamma.push(c.gamma);
        }
        out
    }
}

/// A stepper bound to one mesh, model, boundary data and configuration.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    mesh: &'a Mesh,
    model: &'a TransformedModel,
    bd: &'a BoundaryData,
    cfg: SolverConfig,
    ops: DiscreteOperators,
    regularization: Option<BandedMatrix>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        mesh: &'a Mesh,
        model: &'a TransformedModel,
        bd: &'a BoundaryData,
        cfg: SolverConfig,
    ) -> Result<Self, SolverError> {
        cfg.validate()?;
        let regularization = (cfg.epsilon > 0.0).then(|| regularization_form(mesh));
        Ok(Self { mesh, model, bd, cfg, ops: DiscreteOperators::new(mesh), regularization })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Advances `state` by one step of size `dt` to time `t_next`; `step`
    /// is the index reported in errors.
    pub fn advance(&self, state: &State, t_next: f64, step: usize) -> Result<State, SolverError> {
        state.check(self.mesh)?;
        let dt = self.cfg.dt;
        let fields = NodalFields::at(state, self.mesh, self.model);

        // (M + Δt K(D) [+ εΔt R]) u = M uⁿ − Δt [K(E) ςⁿ + b(f)] + Δt ψ(tⁿ⁺¹)
        let k_d = assemble_stiffness(self.mesh, &fields.d)?;
        let k_e = assemble_stiffness(self.mesh, &fields.e)?;
        let b_f = assemble_flux_vector(self.mesh, &fields.f)?;
        let psi = boundary_functional(self.mesh, self.bd, t_next);
        let mu = self.ops.mass.matvec(&state.u);
        let ke_s = k_e.matvec(&state.varsigma);
        let rhs: Vec<f64> = (0..mu.len()).map(|i| mu[i] - dt * (ke_s[i] + b_f[i]) + dt * psi[i]).collect();
        let mut system = self.ops.mass.add_scaled(&k_d, dt);
        if let Some(reg) = &self.regularization {
            system = system.add_scaled(reg, self.cfg.epsilon * dt);
        }
        let u_next = system
            .solve_spd(&rhs)
            .map_err(|source| SolverError::NotPositiveDefinite { step, t: t_next, source })?;

        let s_next = match &self.regularization {
            None => self.local_stress_update(state, &fields, &u_next, t_next, step)?,
            Some(reg) => self.regularized_stress_update(state, &fields, &u_next, reg, t_next, step)?,
        };

        let next = State::new(t_next, u_next, s_next);
        if let Some(field) = next.first_non_finite() {
            return Err(SolverError::NonFinite { step, t: t_next, field });
        }
        Ok(next)
    }

    fn explicit_guard(&self, fields: &NodalFields) -> Result<(), SolverError> {
        let value = self.cfg.dt * fields.beta1.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        if value >= 1.0 {
            return Err(SolverError::StabilityGuard { value });
        }
        Ok(())
    }

    fn local_stress_update(
        &self,
        state: &State,
        fields: &NodalFields,
        u_next: &[f64],
        t_next: f64,
        step: usize,
    ) -> Result<Vec<f64>, SolverError> {
        let dt = self.cfg.dt;
        match self.cfg.stress_scheme {
            StressScheme::ImplicitDecay => (0..u_next.len())
                .map(|i| {
                    let denominator = 1.0 - dt * fields.beta1[i];
                    if denominator <= 0.0 {
                        return Err(SolverError::SingularStressUpdate { step, t: t_next, node: i, denominator });
                    }
                    Ok((state.varsigma[i] + dt * fields.gamma[i] * u_next[i]) / denominator)
                })
                .collect(),
            StressScheme::Explicit => {
                self.explicit_guard(fields)?;
                Ok((0..u_next.len())
                    .map(|i| {
                        let s = state.varsigma[i];
                        s + dt * (fields.beta1[i] * s + fields.gamma[i] * u_next[i])
                    })
                    .collect())
            }
        }
    }

    fn regularized_stress_update(
        &self,
        state: &State,
        fields: &NodalFields,
        u_next: &[f64],
        reg: &BandedMatrix,
        t_next: f64,
        step: usize,
    ) -> Result<Vec<f64>, SolverError> {
        let dt = self.cfg.dt;
        let ml = &self.ops.lumped_mass;
        // M_L (I − Δt·diag β₁) ς + εΔt R ς = M_L (ςⁿ + Δt γ u)   (implicit decay)
        // M_L ς + εΔt R ς = M_L (ςⁿ + Δt (β₁ςⁿ + γ u))            (explicit)
        let (diag, rhs): (Vec<f64>, Vec<f64>) = match self.cfg.stress_scheme {
            StressScheme::ImplicitDecay => (0..ml.len())
                .map(|i| {
                    (ml[i] * (1.0 - dt * fields.beta1[i]), ml[i] * (state.varsigma[i] + dt * fields.gamma[i] * u_next[i]))
                })
                .unzip(),
            StressScheme::Explicit => {
                self.explicit_guard(fields)?;
                (0..ml.len())
                    .map(|i| {
                        let s = state.varsigma[i];
                        (ml[i], ml[i] * (s + dt * (fields.beta1[i] * s + fields.gamma[i] * u_next[i])))
                    })
                    .unzip()
            }
        };
        let system = BandedMatrix::from_diagonal(&diag).add_scaled(reg, self.cfg.epsilon * dt);
        system.solve_spd(&rhs).map_err(|source| SolverError::NotPositiveDefinite { step, t: t_next, source })
    }
}

/// One unregularized step from `state.t` to `state.t + dt`.
pub fn step(
    state: &State,
    mesh: &Mesh,
    model: &TransformedModel,
    bd: &BoundaryData,
    cfg: &SolverConfig,
) -> Result<State, SolverError> {
    if cfg.epsilon != 0.0 {
        return Err(SolverError::InvalidConfig(format!(
            "step requires epsilon = 0, got {}; use step_regularized",
            cfg.epsilon
        )));
    }
    Stepper::new(mesh, model, bd, *cfg)?.advance(state, state.t + cfg.dt, 1)
}

/// One step of the regularized system; identical to [`step`] when
/// `epsilon = 0`.
pub fn step_regularized(
    state: &State,
    mesh: &Mesh,
    model: &TransformedModel,
    bd: &BoundaryData,
    cfg: &SolverConfig,
) -> Result<State, SolverError> {
    if cfg.epsilon == 0.0 {
        return step(state, mesh, model, bd, cfg);
    }
    Stepper::new(mesh, model, bd, *cfg)?.advance(state, state.t + cfg.dt, 1)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// States at step indices `0, k, 2k, …` and the final step, where `k`
    /// is `output_every`.
    pub trajectory: Vec<State>,
    pub output_steps: Vec<usize>,
    /// One record per step, starting with the initial state.
    pub diagnostics: Vec<DiagnosticsRecord>,
}

impl RunOutput {
    pub fn final_state(&self) -> &State {
        self.trajectory.last().expect("trajectory holds at least the initial state")
    }
}

/// Integrates from the initial data to `cfg.t_end`, recording diagnostics
/// with Lyapunov weight `gamma` at every step. Step `n` ends at `n·dt`.
pub fn run(
    init: &InitialData,
    mesh: &Mesh,
    model: &TransformedModel,
    bd: &BoundaryData,
    cfg: &SolverConfig,
    gamma: f64,
) -> Result<RunOutput, SolverError> {
    run_observed(init, mesh, model, bd, cfg, gamma, |_, _| {})
}

/// [`run`], calling `observer(n, state)` on the initial state and after
/// every step.
pub fn run_observed<F: FnMut(usize, &State)>(
    init: &InitialData,
    mesh: &Mesh,
    model: &TransformedModel,
    bd: &BoundaryData,
    cfg: &SolverConfig,
    gamma: f64,
    mut observer: F,
) -> Result<RunOutput, SolverError> {
    let stepper = Stepper::new(mesh, model, bd, *cfg)?;
    let mut state = init.state();
    state.check(mesh)?;
    let mut recorder = Recorder::new(mesh, gamma)?;
    recorder.push(&state)?;
    observer(0, &state);
    let steps = cfg.steps();
    let mut trajectory = vec![state.clone()];
    let mut output_steps = vec![0];
    for n in 1..=steps {
        state = stepper.advance(&state, n as f64 * cfg.dt, n)?;
        recorder.push(&state)?;
        observer(n, &state);
        if n % cfg.output_every == 0 || n == steps {
            trajectory.push(state.clone());
            output_steps.push(n);
        }
    }
    Ok(RunOutput { trajectory, output_steps, diagnostics: recorder.into_series() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{transform, Coefficient, PhysicalCoefficients, Profile};
    use crate::discretization::{cosine_mode, Influx};

    fn fickian() -> TransformedModel {
        transform(PhysicalCoefficients::fickian(1.0))
    }

    fn cfg(dt: f64, t_end: f64) -> SolverConfig {
        SolverConfig { dt, t_end, output_every: 10, ..Default::default() }
    }

    #[test]
    fn implicit_decay_single_step() {
        let mesh = Mesh::new(1.0, 4).unwrap();
        let model = fickian(); // β₁ = −1, γ = 0
        let state = State::new(0.0, vec![0.0; 5], vec![1.0; 5]);
        let next = step(&state, &mesh, &model, &BoundaryData::zero(), &cfg(0.1, 1.0)).unwrap();
        for s in next.varsigma {
            assert!((s - 1.0 / 1.1).abs() < 1e-15);
        }
        assert!((next.t - 0.1).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_state_follows_the_stress_ode() {
        let model = transform(PhysicalCoefficients {
            beta0: Coefficient::constant(2.0),
            mu0: Profile::Constant(0.5),
            e0: Coefficient::constant(0.3),
            ..PhysicalCoefficients::fickian(1.0)
        });
        let mesh = Mesh::new(1.0, 8).unwrap();
        let mut state = State::new(0.0, vec![0.4; 9], vec![1.0; 9]);
        let c = cfg(0.01, 1.0);
        let mut s_ode = 1.0;
        for _ in 0..50 {
            state = step(&state, &mesh, &model, &BoundaryData::zero(), &c).unwrap();
            s_ode = (s_ode + 0.01 * 0.5 * 0.4) / (1.0 + 0.01 * 2.0);
        }
        for (&u, &s) in state.u.iter().zip(&state.varsigma) {
            assert!((u - 0.4).abs() < 1e-14);
            assert!((s - s_ode).abs() < 1e-14);
        }
    }

    #[test]
    fn explicit_guard_trips() {
        let model = transform(PhysicalCoefficients { beta0: Coefficient::constant(20.0), ..PhysicalCoefficients::fickian(1.0) });
        let mesh = Mesh::new(1.0, 4).unwrap();
        let c = SolverConfig { stress_scheme: StressScheme::Explicit, ..cfg(0.1, 1.0) };
        let state = State::new(0.0, vec![0.0; 5], vec![1.0; 5]);
        assert!(matches!(step(&state, &mesh, &model, &BoundaryData::zero(), &c), Err(SolverError::StabilityGuard { .. })));
    }

    #[test]
    fn lost_ellipticity_is_reported() {
        let model = fickian_with_d(-5.0);
        let mesh = Mesh::new(1.0, 4).unwrap();
        let state = State::new(0.0, cosine_mode(&mesh, 1, 1.0), vec![0.0; 5]);
        let err = step(&state, &mesh, &model, &BoundaryData::zero(), &cfg(0.1, 1.0)).unwrap_err();
        assert!(matches!(err, SolverError::NotPositiveDefinite { step: 1, .. }));
    }

    fn fickian_with_d(d: f64) -> TransformedModel {
        transform(PhysicalCoefficients::fickian(d))
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0.0, 1.0).validate().is_err());
        assert!(cfg(-1e-3, 1.0).validate().is_err());
        assert!(cfg(0.1, 0.05).validate().is_err());
        assert!(cfg(0.1, 0.0).validate().is_ok());
        assert!(SolverConfig { epsilon: -1.0, ..cfg(0.1, 1.0) }.validate().is_err());
        let mesh = Mesh::new(1.0, 4).unwrap();
        let state = State::new(0.0, vec![0.0; 5], vec![0.0; 5]);
        let c = SolverConfig { epsilon: 1e-3, ..cfg(0.1, 1.0) };
        assert!(step(&state, &mesh, &fickian(), &BoundaryData::zero(), &c).is_err());
    }

    #[test]
    fn zero_epsilon_dispatch_is_bitwise_identical() {
        let mesh = Mesh::new(1.0, 16).unwrap();
        let model = transform(PhysicalCoefficients {
            e0: Coefficient::constant(0.2),
            mu0: Profile::Constant(0.3),
            ..PhysicalCoefficients::fickian(0.5)
        });
        let state = State::new(0.0, cosine_mode(&mesh, 2, 0.3), cosine_mode(&mesh, 1, 0.1));
        let bd = BoundaryData::new(Influx::Constant(0.2), Influx::Zero);
        let a = step(&state, &mesh, &model, &bd, &cfg(1e-2, 1.0)).unwrap();
        let b = step_regularized(&state, &mesh, &model, &bd, &cfg(1e-2, 1.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn regularized_step_keeps_constants_constant() {
        let mesh = Mesh::new(1.0, 16).unwrap();
        let model = transform(PhysicalCoefficients { mu0: Profile::Constant(0.3), ..PhysicalCoefficients::fickian(1.0) });
        let c = SolverConfig { epsilon: 1e-2, ..cfg(1e-2, 1.0) };
        let mut state = State::new(0.0, vec![0.6; 17], vec![0.2; 17]);
        for _ in 0..20 {
            state = step_regularized(&state, &mesh, &model, &BoundaryData::zero(), &c).unwrap();
        }
        let (u0, s0) = (state.u[0], state.varsigma[0]);
        assert!(state.u.iter().all(|&u| (u - u0).abs() < 1e-13));
        assert!(state.varsigma.iter().all(|&s| (s - s0).abs() < 1e-13));
        // the identity part of (I + L_h)² damps the mean: u = 0.6/(1 + εΔt)ⁿ
        assert!((u0 - 0.6 / (1.0f64 + 1e-4).powi(20)).abs() < 1e-13);
    }

    #[test]
    fn run_with_zero_horizon_returns_initial_state() {
        let mesh = Mesh::new(1.0, 8).unwrap();
        let model = fickian();
        let init = InitialData::new(&model, cosine_mode(&mesh, 1, 1.0), vec![0.0; 9]).unwrap();
        let out = run(&init, &mesh, &model, &BoundaryData::zero(), &cfg(0.1, 0.0), 1.0).unwrap();
        assert_eq!(out.trajectory.len(), 1);
        assert_eq!(out.diagnostics.len(), 1);
        assert_eq!(out.trajectory[0], init.state());
    }

    #[test]
    fn sigma_reconstruction() {
        let mesh = Mesh::new(1.0, 4).unwrap();
        let state = State::new(0.0, vec![0.1, 0.2, 0.3, 0.4, 0.5], vec![1.0; 5]);
        assert_eq!(reconstruct_sigma(&state, &fickian()), vec![1.0; 5]);
        let model = transform(PhysicalCoefficients { nu0: Profile::Constant(0.5), ..PhysicalCoefficients::fickian(1.0) });
        let sigma = reconstruct_sigma(&state, &model);
        for (s, u) in sigma.iter().zip(&state.u) {
            assert!((s - (1.0 + 0.5 * u)).abs() < 1e-15);
        }
        let init = InitialData::new(&model, state.u.clone(), sigma.clone()).unwrap();
        let back = reconstruct_sigma(&init.state(), &model);
        for (a, b) in back.iter().zip(&sigma) {
            assert!((a - b).abs() < 1e-12);
        }
        let _ = mesh;
    }

    #[test]
    fn flux_of_constant_state_vanishes() {
        let mesh = Mesh::new(1.0, 8).unwrap();
        let state = State::new(0.0, vec![0.3; 9], vec![0.1; 9]);
        let j = compute_flux(&state, &mesh, &fickian()).unwrap();
        assert!(j.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nan_watchdog_reports_step() {
        let model = transform(PhysicalCoefficients {
            d0: Coefficient::field("nan", |p| if p.t > 0.25 { f64::NAN } else { 1.0 }, None),
            ..PhysicalCoefficients::fickian(1.0)
        });
        let mesh = Mesh::new(1.0, 4).unwrap();
        let init = InitialData::new(&model, cosine_mode(&mesh, 1, 1.0), vec![0.0; 5]).unwrap();
        let err = run(&init, &mesh, &model, &BoundaryData::zero(), &cfg(0.1, 1.0), 1.0).unwrap_err();
        assert!(matches!(err, SolverError::NotPositiveDefinite { step: 4, .. } | SolverError::NonFinite { step: 4, .. }), "{err:?}");
    }
}
