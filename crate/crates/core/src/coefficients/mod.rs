//! Coefficient models of the concentration–stress system.
//!
//! The physical model is written in terms of the raw coefficients
//! `D₀, E₀, M₀, β₀` (functions of `(t, x, u, σ)`) and `μ₀, ν₀` (functions of
//! `u`). The solver works with the transformed stress
//! `ς = σ − ∫₀ᵘ ν₀`, which removes the `∂u/∂t` term from the stress
//! equation; [`transform`] builds the coefficients of that form.

mod checks;
mod profile;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use checks::{
    check_assumptions, check_longtime_condition, condition_min_eigenvalue, find_gamma, AssumptionBounds,
    LongTimeCondition, SampleBox, ViolationReport,
};
pub use profile::{gauss_legendre, Arg, CohenLaw, CustomLaw, Point, Profile, TanhLaw, FD_SMOOTHNESS_TOL};

use profile::{central_difference, fd_step};

/// Below this `|u|` the ratio `(∫₀ᵘν₀)/u` is replaced by its limit `ν₀(u)`.
pub const U_LIMIT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoefficientError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("{what} is not smooth near {at}: stencils give {h_estimate} and {h2_estimate}")]
    NonSmooth { what: String, at: f64, h_estimate: f64, h2_estimate: f64 },
    #[error("sample box is empty: axis `{axis}` has upper bound below lower bound")]
    EmptyBox { axis: &'static str },
    #[error("sample box has zero volume")]
    ZeroVolumeBox,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("assumption violated: {0}")]
    AssumptionViolation(ViolationReport),
    #[error("long-time condition fails for Gamma = {gamma}: minimum eigenvalue {eigenvalue} at {point:?}")]
    LongTimeFailure { gamma: f64, eigenvalue: f64, point: Point },
    #[error("no Gamma candidate satisfies the long-time condition (best eigenvalue {best_eigenvalue} at Gamma = {best_gamma})")]
    AllCandidatesFailed { best_gamma: f64, best_eigenvalue: f64 },
    #[error("Gamma grid must be nonempty with positive entries")]
    InvalidGammaGrid,
}

fn positive(name: &str, v: f64) -> Result<(), CoefficientError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CoefficientError::InvalidParameter { name: name.into(), reason: format!("must be positive, got {v}") })
    }
}

/// Glass–rubber relaxation-rate law parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlassRubberParams {
    pub beta_r: f64,
    pub beta_g: f64,
    pub delta: f64,
    pub u_rg: f64,
}

impl GlassRubberParams {
    pub fn new(beta_r: f64, beta_g: f64, delta: f64, u_rg: f64) -> Result<Self, CoefficientError> {
        positive("beta_G", beta_g)?;
        positive("delta", delta)?;
        if !(beta_r > beta_g) {
            return Err(CoefficientError::InvalidParameter {
                name: "beta_R".into(),
                reason: format!("must exceed beta_G = {beta_g}, got {beta_r}"),
            });
        }
        if !(u_rg > 0.0 && u_rg < 1.0) {
            return Err(CoefficientError::InvalidParameter {
                name: "u_RG".into(),
                reason: format!("must lie in (0, 1), got {u_rg}"),
            });
        }
        Ok(Self { beta_r, beta_g, delta, u_rg })
    }

    pub fn law(&self) -> TanhLaw {
        TanhLaw { low: self.beta_g, high: self.beta_r, center: self.u_rg, width: self.delta }
    }
}

/// Parameters of the stress-diffusion law `α₁u(u−1)²/(α₂+(u−1)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressDiffusionParams {
    pub alpha_1: f64,
    pub alpha_2: f64,
}

impl StressDiffusionParams {
    pub fn new(alpha_1: f64, alpha_2: f64) -> Result<Self, CoefficientError> {
        positive("alpha_1", alpha_1)?;
        positive("alpha_2", alpha_2)?;
        Ok(Self { alpha_1, alpha_2 })
    }

    pub fn law(&self) -> CohenLaw {
        CohenLaw { alpha_1: self.alpha_1, alpha_2: self.alpha_2 }
    }
}

/// Concentration-dependent diffusivity rising from `d_g` (glassy) to `d_r`
/// (rubbery) with the same tanh shape as the relaxation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusivityParams {
    pub d_r: f64,
    pub d_g: f64,
    pub delta: f64,
    pub u_rg: f64,
}

impl DiffusivityParams {
    pub fn new(d_r: f64, d_g: f64, delta: f64, u_rg: f64) -> Result<Self, CoefficientError> {
        positive("D_G", d_g)?;
        positive("delta", delta)?;
        if !(d_r > d_g) {
            return Err(CoefficientError::InvalidParameter {
                name: "D_R".into(),
                reason: format!("must exceed D_G = {d_g}, got {d_r}"),
            });
        }
        Ok(Self { d_r, d_g, delta, u_rg })
    }

    pub fn law(&self) -> TanhLaw {
        TanhLaw { low: self.d_g, high: self.d_r, center: self.u_rg, width: self.delta }
    }
}

/// Relaxation rate `½(β_R+β_G) + ½(β_R−β_G)·tanh((u−u_RG)/δ)`.
pub fn eval_beta0(u: f64, p: &GlassRubberParams) -> f64 {
    p.law().value(u)
}

/// Stress-diffusion coefficient `α₁·u·(u−1)²/(α₂+(u−1)²)`.
pub fn eval_e0(u: f64, p: &StressDiffusionParams) -> f64 {
    p.law().value(u)
}

/// Tanh diffusivity law, bounded below by `D_G`.
pub fn eval_d0_tanh(u: f64, p: &DiffusivityParams) -> f64 {
    p.law().value(u)
}

/// A user-supplied coefficient of all four arguments.
pub struct CustomField {
    pub name: String,
    pub value: Box<dyn Fn(Point) -> f64 + Send + Sync>,
    /// Partial derivatives `[∂t, ∂x, ∂u, ∂s]`.
    pub gradient: Option<Box<dyn Fn(Point) -> [f64; 4] + Send + Sync>>,
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomField").field("name", &self.name).field("gradient", &self.gradient.is_some()).finish()
    }
}

/// A coefficient of `(t, x, u, s)`.
#[derive(Debug, Clone)]
pub enum Coefficient {
    /// A univariate law applied to one argument.
    Law { profile: Profile, arg: Arg },
    Field(Arc<CustomField>),
}

impl PartialEq for Coefficient {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Coefficient::Law { profile: a, arg: x }, Coefficient::Law { profile: b, arg: y }) => a == b && x == y,
            (Coefficient::Field(a), Coefficient::Field(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Coefficient::Law { profile: Profile::Constant(c), arg: Arg::U }
    }

    pub fn of_u(profile: Profile) -> Self {
        Coefficient::Law { profile, arg: Arg::U }
    }

    pub fn field(
        name: &str,
        value: impl Fn(Point) -> f64 + Send + Sync + 'static,
        gradient: Option<Box<dyn Fn(Point) -> [f64; 4] + Send + Sync>>,
    ) -> Self {
        Coefficient::Field(Arc::new(CustomField { name: name.into(), value: Box::new(value), gradient }))
    }

    pub fn value(&self, p: Point) -> f64 {
        match self {
            Coefficient::Law { profile, arg } => profile.value(p.get(*arg)),
            Coefficient::Field(f) => (f.value)(p),
        }
    }

    pub fn has_exact_partials(&self) -> bool {
        match self {
            Coefficient::Law { profile, .. } => !matches!(profile, Profile::Custom(law) if law.derivative.is_none()),
            Coefficient::Field(f) => f.gradient.is_some(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Law { profile: Profile::Constant(_), .. })
    }

    /// Constant value when the coefficient is a constant law.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Coefficient::Law { profile: Profile::Constant(c), .. } => Some(*c),
            _ => None,
        }
    }

    /// Partial derivative with respect to `wrt`; exact when available,
    /// otherwise a central difference with a smoothness check.
    pub fn partial(&self, p: Point, wrt: Arg) -> Result<f64, CoefficientError> {
        match self {
            Coefficient::Law { profile, arg } => {
                if *arg != wrt {
                    Ok(0.0)
                } else {
                    profile.derivative(p.get(wrt))
                }
            }
            Coefficient::Field(f) => match &f.gradient {
                Some(g) => {
                    let grad = g(p);
                    Ok(match wrt {
                        Arg::T => grad[0],
                        Arg::X => grad[1],
                        Arg::U => grad[2],
                        Arg::S => grad[3],
                    })
                }
                None => central_difference(|z| (f.value)(p.with(wrt, z)), p.get(wrt), &f.name),
            },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Coefficient::Law { profile, arg } => format!("{}({})", profile.name(), arg.name()),
            Coefficient::Field(f) => f.name.clone(),
        }
    }
}

/// The raw coefficients of the physical model.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalCoefficients {
    pub d0: Coefficient,
    pub e0: Coefficient,
    /// Convection velocity.
    pub m0: Coefficient,
    pub beta0: Coefficient,
    pub mu0: Profile,
    pub nu0: Profile,
}

impl PhysicalCoefficients {
    /// `D₀ = 1`, `β₀ = 1`, everything else zero: plain diffusion.
    pub fn fickian(diffusivity: f64) -> Self {
        Self {
            d0: Coefficient::constant(diffusivity),
            e0: Coefficient::constant(0.0),
            m0: Coefficient::constant(0.0),
            beta0: Coefficient::constant(1.0),
            mu0: Profile::Constant(0.0),
            nu0: Profile::Constant(0.0),
        }
    }

    pub fn nu0_antiderivative(&self, u: f64) -> f64 {
        self.nu0.antiderivative(u)
    }

    /// Checks `ν₀ ≥ 0`, `∫₀⁰ν₀ = 0` and that the antiderivative differentiates
    /// back to `ν₀` on `n` points of `[u_lo, u_hi]`.
    pub fn validate_nu0(&self, u_lo: f64, u_hi: f64, n: usize) -> Result<(), CoefficientError> {
        let bad = |reason: String| Err(CoefficientError::InvalidParameter { name: "nu0".into(), reason });
        if self.nu0_antiderivative(0.0) != 0.0 {
            return bad(format!("antiderivative at 0 is {}", self.nu0_antiderivative(0.0)));
        }
        for k in 0..n.max(1) {
            let u = if n <= 1 { u_lo } else { u_lo + (u_hi - u_lo) * k as f64 / (n - 1) as f64 };
            let v = self.nu0.value(u);
            if v < 0.0 || !v.is_finite() {
                return bad(format!("nu0({u}) = {v} is negative"));
            }
            let h = fd_step(u);
            let d = (self.nu0_antiderivative(u + h) - self.nu0_antiderivative(u - h)) / (2.0 * h);
            if (d - v).abs() > 1e-6 * (1.0 + v.abs()) {
                return bad(format!("antiderivative slope {d} does not match nu0({u}) = {v}"));
            }
        }
        Ok(())
    }
}

/// Transformed coefficients `D, E, f, β₁, γ` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedCoefficients {
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub beta1: f64,
    pub gamma: f64,
}

/// Partial derivatives of `β₁` and `γ` in the transformed variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Partials {
    pub dbeta1_du: f64,
    pub dbeta1_ds: f64,
    pub dbeta1_dx: f64,
    pub dgamma_du: f64,
    pub dgamma_ds: f64,
    pub dgamma_dx: f64,
}

/// The coefficients `β, μ, g` of the stress-equation gradient
/// `∇(β₁ς + γu) = β∇u + μ∇ς + g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCoefficients {
    pub beta: f64,
    pub mu: f64,
    pub g: f64,
}

impl GradientCoefficients {
    pub fn from_partials(c: &TransformedCoefficients, p: &Partials, u: f64, s: f64) -> Self {
        Self {
            beta: p.dbeta1_du * s + c.gamma + p.dgamma_du * u,
            mu: c.beta1 + p.dbeta1_ds * s + p.dgamma_ds * u,
            g: p.dbeta1_dx * s + p.dgamma_dx * u,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartialsMode {
    Analytic,
    FiniteDifference,
}

/// The system in the transformed stress variable `ς`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedModel {
    phys: PhysicalCoefficients,
    mode: PartialsMode,
}

/// Builds the transformed model from the physical coefficients.
pub fn transform(phys: PhysicalCoefficients) -> TransformedModel {
    let analytic = phys.beta0.has_exact_partials()
        && phys.mu0.exact_derivative(0.0).is_some()
        && phys.nu0.exact_derivative(0.0).is_some();
    let mode = if analytic { PartialsMode::Analytic } else { PartialsMode::FiniteDifference };
    TransformedModel { phys, mode }
}

impl TransformedModel {
    pub fn physical(&self) -> &PhysicalCoefficients {
        &self.phys
    }

    pub fn partials_mode(&self) -> PartialsMode {
        self.mode
    }

    /// Forces the finite-difference route for the partials.
    pub fn with_finite_differences(mut self) -> Self {
        self.mode = PartialsMode::FiniteDifference;
        self
    }

    /// Physical stress `σ = ς + ∫₀ᵘν₀`.
    pub fn sigma(&self, u: f64, varsigma: f64) -> f64 {
        varsigma + self.phys.nu0_antiderivative(u)
    }

    /// Transformed stress `ς = σ − ∫₀ᵘν₀`.
    pub fn varsigma(&self, u: f64, sigma: f64) -> f64 {
        sigma - self.phys.nu0_antiderivative(u)
    }

    fn physical_point(&self, p: Point) -> Point {
        Point { s: self.sigma(p.u, p.s), ..p }
    }

    /// `(∫₀ᵘν₀)/u`, with the continuity value `ν₀(u)` near zero.
    fn nu_ratio(&self, u: f64) -> f64 {
        if u.abs() < U_LIMIT_THRESHOLD {
            self.phys.nu0.value(u)
        } else {
            self.phys.nu0_antiderivative(u) / u
        }
    }

    pub fn eval(&self, p: Point) -> TransformedCoefficients {
        let q = self.physical_point(p);
        let e0 = self.phys.e0.value(q);
        let beta0 = self.phys.beta0.value(q);
        TransformedCoefficients {
            d: self.phys.d0.value(q) + self.phys.nu0.value(p.u) * e0,
            e: e0,
            f: -p.u * self.phys.m0.value(q),
            beta1: -beta0,
            gamma: self.phys.mu0.value(p.u) - beta0 * self.nu_ratio(p.u),
        }
    }

    pub fn d(&self, p: Point) -> f64 {
        self.eval(p).d
    }

    pub fn e(&self, p: Point) -> f64 {
        self.phys.e0.value(self.physical_point(p))
    }

    pub fn f(&self, p: Point) -> f64 {
        -p.u * self.phys.m0.value(self.physical_point(p))
    }

    pub fn beta1(&self, p: Point) -> f64 {
        -self.phys.beta0.value(self.physical_point(p))
    }

    pub fn gamma(&self, p: Point) -> f64 {
        let beta0 = self.phys.beta0.value(self.physical_point(p));
        self.phys.mu0.value(p.u) - beta0 * self.nu_ratio(p.u)
    }

    pub fn partials(&self, p: Point) -> Result<Partials, CoefficientError> {
        match self.mode {
            PartialsMode::Analytic => self.analytic_partials(p),
            PartialsMode::FiniteDifference => self.fd_partials(p),
        }
    }

    fn analytic_partials(&self, p: Point) -> Result<Partials, CoefficientError> {
        let phys = &self.phys;
        let q = self.physical_point(p);
        let u = p.u;
        let nu = phys.nu0.value(u);
        let beta0 = phys.beta0.value(q);
        let b_u = phys.beta0.partial(q, Arg::U)?;
        let b_s = phys.beta0.partial(q, Arg::S)?;
        let b_x = phys.beta0.partial(q, Arg::X)?;
        // σ depends on u through ∫₀ᵘν₀, so d/du picks up ν₀·∂β₀/∂σ
        let db0_du = b_u + b_s * nu;
        let ratio = self.nu_ratio(u);
        let dratio = if u.abs() < U_LIMIT_THRESHOLD {
            0.5 * phys.nu0.derivative(u)?
        } else {
            (u * nu - phys.nu0_antiderivative(u)) / (u * u)
        };
        Ok(Partials {
            dbeta1_du: -db0_du,
            dbeta1_ds: -b_s,
            dbeta1_dx: -b_x,
            dgamma_du: phys.mu0.derivative(u)? - db0_du * ratio - beta0 * dratio,
            dgamma_ds: -b_s * ratio,
            dgamma_dx: -b_x * ratio,
        })
    }

    fn fd_partials(&self, p: Point) -> Result<Partials, CoefficientError> {
        let b1 = |arg: Arg| central_difference(|z| self.beta1(p.with(arg, z)), p.get(arg), "beta1");
        let gm = |arg: Arg| central_difference(|z| self.gamma(p.with(arg, z)), p.get(arg), "gamma");
        Ok(Partials {
            dbeta1_du: b1(Arg::U)?,
            dbeta1_ds: b1(Arg::S)?,
            dbeta1_dx: b1(Arg::X)?,
            dgamma_du: gm(Arg::U)?,
            dgamma_ds: gm(Arg::S)?,
            dgamma_dx: gm(Arg::X)?,
        })
    }

    pub fn gradient_coefficients(&self, p: Point) -> Result<GradientCoefficients, CoefficientError> {
        let c = self.eval(p);
        let partials = self.partials(p)?;
        Ok(GradientCoefficients::from_partials(&c, &partials, p.u, p.s))
    }

    /// True when no coefficient depends on `x` or `t`.
    pub fn is_autonomous_and_homogeneous(&self) -> bool {
        let law_free = |c: &Coefficient| match c {
            Coefficient::Law { profile: Profile::Constant(_), .. } => true,
            Coefficient::Law { arg, .. } => matches!(arg, Arg::U | Arg::S),
            Coefficient::Field(_) => false,
        };
        law_free(&self.phys.d0) && law_free(&self.phys.e0) && law_free(&self.phys.m0) && law_free(&self.phys.beta0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn glass_rubber() -> GlassRubberParams {
        GlassRubberParams::new(2.0, 1.0, 0.05, 0.5).unwrap()
    }

    #[test]
    fn beta0_midpoint_and_asymptotes() {
        let p = glass_rubber();
        assert!((eval_beta0(0.5, &p) - 1.5).abs() < 1e-14);
        assert!((eval_beta0(0.5 + 50.0 * 0.05, &p) - 2.0).abs() < 1e-12);
        assert!((eval_beta0(0.5 - 50.0 * 0.05, &p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta0_reference_value() {
        // 1.5 + 0.5·tanh(1), tanh(1) = 0.76159415595576488812
        let expected = 1.5 + 0.5 * 0.761_594_155_955_764_9;
        assert!((eval_beta0(0.55, &glass_rubber()) - expected).abs() < 1e-12);
        assert!((expected - 1.880_797_077_9).abs() < 1e-10);
    }

    #[test]
    fn e0_vanishes_at_both_ends() {
        let p = StressDiffusionParams::new(1.0, 0.01).unwrap();
        assert_eq!(eval_e0(0.0, &p), 0.0);
        assert_eq!(eval_e0(1.0, &p), 0.0);
        assert!((eval_e0(0.5, &p) - 0.125 / 0.26).abs() < 1e-15);
        assert!((eval_e0(0.5, &p) - 0.480_769_230_8).abs() < 1e-10);
    }

    #[test]
    fn d0_tanh_values_and_monotonicity() {
        let p = DiffusivityParams::new(1.0, 0.1, 0.05, 0.5).unwrap();
        assert!((eval_d0_tanh(0.5, &p) - 0.55).abs() < 1e-15);
        assert!((eval_d0_tanh(0.55, &p) - (0.55 + 0.45 * 1f64.tanh())).abs() < 1e-14);
        assert!((eval_d0_tanh(0.55, &p) - 0.8927).abs() < 1e-4);
        let values: Vec<f64> = (0..1000).map(|k| eval_d0_tanh(-1.0 + 3.0 * k as f64 / 999.0, &p)).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        assert!(values.iter().all(|&v| v >= 0.1));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(GlassRubberParams::new(1.0, 2.0, 0.05, 0.5).is_err());
        assert!(GlassRubberParams::new(2.0, 1.0, 0.0, 0.5).is_err());
        assert!(GlassRubberParams::new(2.0, 1.0, 0.05, 1.0).is_err());
        assert!(StressDiffusionParams::new(1.0, 0.0).is_err());
        assert!(DiffusivityParams::new(0.1, 1.0, 0.05, 0.5).is_err());
    }

    fn with_nu(nu0: Profile) -> PhysicalCoefficients {
        PhysicalCoefficients {
            d0: Coefficient::of_u(Profile::Tanh(DiffusivityParams::new(1.0, 0.1, 0.1, 0.5).unwrap().law())),
            e0: Coefficient::of_u(Profile::Cohen(CohenLaw { alpha_1: 1.0, alpha_2: 0.01 })),
            m0: Coefficient::constant(0.3),
            beta0: Coefficient::of_u(Profile::Tanh(glass_rubber().law())),
            mu0: Profile::Constant(0.4),
            nu0,
        }
    }

    #[test]
    fn zero_nu_leaves_coefficients_untouched() {
        let phys = with_nu(Profile::Constant(0.0));
        let model = transform(phys.clone());
        for &(u, s) in &[(0.0, 0.3), (0.4, -1.0), (0.9, 2.0)] {
            let p = Point::new(0.1, 0.2, u, s);
            let c = model.eval(p);
            assert_eq!(model.sigma(u, s), s);
            assert_eq!(c.d, phys.d0.value(p));
            assert_eq!(c.e, phys.e0.value(p));
            assert_eq!(c.f, -u * 0.3);
            assert_eq!(c.beta1, -phys.beta0.value(p));
            assert_eq!(c.gamma, 0.4);
        }
    }

    #[test]
    fn gamma_limit_at_zero_concentration() {
        let model = transform(with_nu(Profile::Polynomial(vec![0.2, 0.5])));
        let p = Point::new(0.0, 0.0, 0.0, 0.7);
        let expected = 0.4 - model.physical().beta0.value(Point::new(0.0, 0.0, 0.0, 0.7)) * 0.2;
        assert_eq!(model.gamma(p), expected);
    }

    #[test]
    fn gamma_constant_nu_cancels_the_ratio() {
        let phys = PhysicalCoefficients {
            beta0: Coefficient::constant(1.5),
            mu0: Profile::Constant(0.8),
            nu0: Profile::Constant(0.3),
            ..PhysicalCoefficients::fickian(1.0)
        };
        let model = transform(phys);
        let expected = 0.8 - 1.5 * 0.3;
        for &u in &[0.0, 1e-9, 1e-8, 0.5, 1.0] {
            assert!((model.gamma(Point::new(0.0, 0.0, u, 0.2)) - expected).abs() < 1e-14, "u = {u}");
        }
    }

    #[test]
    fn constant_rates_give_trivial_gradient_coefficients() {
        let phys = PhysicalCoefficients {
            beta0: Coefficient::constant(2.0),
            mu0: Profile::Constant(0.7),
            ..PhysicalCoefficients::fickian(1.0)
        };
        let g = transform(phys).gradient_coefficients(Point::new(0.3, 0.4, 0.2, -0.5)).unwrap();
        assert_eq!(g, GradientCoefficients { beta: 0.7, mu: -2.0, g: 0.0 });
    }

    #[test]
    fn linear_rate_gradient_coefficients() {
        // β₁(u) = −u via β₀(u) = u, γ ≡ 1 via μ₀ ≡ 1.
        let phys = PhysicalCoefficients {
            beta0: Coefficient::of_u(Profile::Polynomial(vec![0.0, 1.0])),
            mu0: Profile::Constant(1.0),
            ..PhysicalCoefficients::fickian(1.0)
        };
        let g = transform(phys).gradient_coefficients(Point::new(0.0, 0.0, 2.0, 3.0)).unwrap();
        assert!((g.beta - -2.0).abs() < 1e-15);
        assert!((g.mu - -2.0).abs() < 1e-15);
        assert_eq!(g.g, 0.0);
    }

    #[test]
    fn analytic_and_fd_partials_agree_with_x_and_stress_dependence() {
        let beta0 = Coefficient::field(
            "beta0(x,u,sigma)",
            |p| 1.0 + 0.3 * (2.0 * p.x).sin() + 0.2 * p.u * p.u + 0.1 * p.s.tanh(),
            Some(Box::new(|p: Point| {
                let c = p.s.cosh();
                [0.0, 0.6 * (2.0 * p.x).cos(), 0.4 * p.u, 0.1 / (c * c)]
            })),
        );
        let phys = PhysicalCoefficients {
            beta0,
            mu0: Profile::Polynomial(vec![0.5, 0.1]),
            nu0: Profile::Polynomial(vec![0.2, 0.3, 0.1]),
            ..PhysicalCoefficients::fickian(1.0)
        };
        let analytic = transform(phys);
        assert_eq!(analytic.partials_mode(), PartialsMode::Analytic);
        let fd = analytic.clone().with_finite_differences();
        for &(x, u, s) in &[(0.1, 0.2, 0.3), (0.7, 0.9, -0.4), (0.3, 1e-3, 0.1), (0.5, 0.0, 0.8)] {
            let p = Point::new(0.0, x, u, s);
            let a = analytic.gradient_coefficients(p).unwrap();
            let b = fd.gradient_coefficients(p).unwrap();
            for (va, vb) in [(a.beta, b.beta), (a.mu, b.mu), (a.g, b.g)] {
                assert!((va - vb).abs() <= 1e-6 * (1.0 + va.abs()), "{a:?} vs {b:?} at {p:?}");
            }
        }
    }

    #[test]
    fn nu0_validation() {
        assert!(with_nu(Profile::Polynomial(vec![0.2, 0.5])).validate_nu0(0.0, 1.0, 21).is_ok());
        assert!(with_nu(Profile::Polynomial(vec![-0.2, 0.5])).validate_nu0(0.0, 1.0, 21).is_err());
    }
}
