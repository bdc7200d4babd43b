//! Scalar coefficient laws and their evaluation points.
//!
//! Every built-in law is a function of one argument and carries its exact
//! derivative and antiderivative, so the gradient coefficients and the
//! change of stress variable never fall back to numerical differentiation
//! for built-in models.

use std::fmt;
use std::sync::Arc;

use super::CoefficientError;

/// Evaluation point `(t, x, u, s)` where `s` is either the physical stress
/// `σ` or the transformed stress `ς`, depending on context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub t: f64,
    pub x: f64,
    pub u: f64,
    pub s: f64,
}

impl Point {
    pub fn new(t: f64, x: f64, u: f64, s: f64) -> Self {
        Self { t, x, u, s }
    }

    pub fn get(&self, arg: Arg) -> f64 {
        match arg {
            Arg::T => self.t,
            Arg::X => self.x,
            Arg::U => self.u,
            Arg::S => self.s,
        }
    }

    pub fn with(mut self, arg: Arg, value: f64) -> Self {
        match arg {
            Arg::T => self.t = value,
            Arg::X => self.x = value,
            Arg::U => self.u = value,
            Arg::S => self.s = value,
        }
        self
    }
}

/// Argument a univariate law is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arg {
    T,
    X,
    U,
    /// The stress argument (σ for physical coefficients).
    S,
}

impl Arg {
    pub const ALL: [Arg; 4] = [Arg::T, Arg::X, Arg::U, Arg::S];

    pub fn name(self) -> &'static str {
        match self {
            Arg::T => "t",
            Arg::X => "x",
            Arg::U => "u",
            Arg::S => "sigma",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "t" => Some(Arg::T),
            "x" => Some(Arg::X),
            "u" => Some(Arg::U),
            "sigma" | "s" => Some(Arg::S),
            _ => None,
        }
    }
}

/// Smoothed step `½(low+high) + ½(high−low)·tanh((z−center)/width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhLaw {
    pub low: f64,
    pub high: f64,
    pub center: f64,
    pub width: f64,
}

impl TanhLaw {
    pub fn value(&self, z: f64) -> f64 {
        0.5 * (self.high + self.low) + 0.5 * (self.high - self.low) * ((z - self.center) / self.width).tanh()
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let c = ((z - self.center) / self.width).cosh();
        0.5 * (self.high - self.low) / (self.width * c * c)
    }

    pub fn antiderivative(&self, z: f64) -> f64 {
        let w = self.width;
        0.5 * (self.high + self.low) * z
            + 0.5 * (self.high - self.low) * w * (log_cosh((z - self.center) / w) - log_cosh(-self.center / w))
    }
}

fn log_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Stress-diffusion law `α₁·u·(u−1)² / (α₂ + (u−1)²)`, vanishing at 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohenLaw {
    pub alpha_1: f64,
    pub alpha_2: f64,
}

impl CohenLaw {
    pub fn value(&self, u: f64) -> f64 {
        let w2 = (u - 1.0) * (u - 1.0);
        self.alpha_1 * u * w2 / (self.alpha_2 + w2)
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let w = u - 1.0;
        let q = self.alpha_2 + w * w;
        self.alpha_1 * (w * w / q + u * 2.0 * w * self.alpha_2 / (q * q))
    }

    pub fn antiderivative(&self, u: f64) -> f64 {
        // u·w²/(α₂+w²) = u − α₂(w+1)/(α₂+w²) with w = u − 1
        let a2 = self.alpha_2;
        let r = a2.sqrt();
        let prim = |u: f64| {
            let w = u - 1.0;
            0.5 * u * u - a2 * (0.5 * (a2 + w * w).ln() + (w / r).atan() / r)
        };
        self.alpha_1 * (prim(u) - prim(0.0))
    }
}

/// User-supplied univariate law.
pub struct CustomLaw {
    pub name: String,
    pub value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub derivative: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub antiderivative: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLaw")
            .field("name", &self.name)
            .field("derivative", &self.derivative.is_some())
            .field("antiderivative", &self.antiderivative.is_some())
            .finish()
    }
}

/// A univariate coefficient law.
#[derive(Debug, Clone)]
pub enum Profile {
    Constant(f64),
    Tanh(TanhLaw),
    Cohen(CohenLaw),
    /// Coefficients in increasing degree.
    Polynomial(Vec<f64>),
    Custom(Arc<CustomLaw>),
}

/// Step used by the central-difference fallback.
pub(crate) fn fd_step(z: f64) -> f64 {
    1e-5 * (1.0 + z.abs())
}

impl Profile {
    pub fn value(&self, z: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Tanh(law) => law.value(z),
            Profile::Cohen(law) => law.value(z),
            Profile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * z + a),
            Profile::Custom(law) => (law.value)(z),
        }
    }

    /// Exact derivative, or `None` for a custom law without one.
    pub fn exact_derivative(&self, z: f64) -> Option<f64> {
        Some(match self {
            Profile::Constant(_) => 0.0,
            Profile::Tanh(law) => law.derivative(z),
            Profile::Cohen(law) => law.derivative(z),
            Profile::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &a)| acc * z + k as f64 * a),
            Profile::Custom(law) => return law.derivative.as_ref().map(|d| d(z)),
        })
    }

    pub fn derivative(&self, z: f64) -> Result<f64, CoefficientError> {
        match self.exact_derivative(z) {
            Some(d) => Ok(d),
            None => central_difference(|y| self.value(y), z, "custom law"),
        }
    }

    /// `∫₀ᶻ` of the law. Custom laws without a supplied antiderivative are
    /// integrated by composite Gauss–Legendre quadrature.
    pub fn antiderivative(&self, z: f64) -> f64 {
        match self {
            Profile::Constant(c) => c * z,
            Profile::Tanh(law) => law.antiderivative(z),
            Profile::Cohen(law) => law.antiderivative(z),
            Profile::Polynomial(c) => {
                c.iter().enumerate().rev().fold(0.0, |acc, (k, &a)| acc * z + a / (k as f64 + 1.0)) * z
            }
            Profile::Custom(law) => match &law.antiderivative {
                Some(f) => f(z) - f(0.0),
                None => gauss_legendre(|y| (law.value)(y), 0.0, z, 64),
            },
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Profile::Constant(_) => "constant",
            Profile::Tanh(_) => "tanh",
            Profile::Cohen(_) => "cohen-e0",
            Profile::Polynomial(_) => "polynomial",
            Profile::Custom(law) => &law.name,
        }
    }
}

impl PartialEq for Profile {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Profile::Constant(a), Profile::Constant(b)) => a == b,
            (Profile::Tanh(a), Profile::Tanh(b)) => a == b,
            (Profile::Cohen(a), Profile::Cohen(b)) => a == b,
            (Profile::Polynomial(a), Profile::Polynomial(b)) => a == b,
            (Profile::Custom(a), Profile::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Relative disagreement between the `h` and `2h` stencils above which a
/// function is declared non-smooth at the evaluation point.
pub const FD_SMOOTHNESS_TOL: f64 = 1e-4;

const ONE_SIDED_TOL: f64 = 1e-2;

pub(crate) fn central_difference<F: Fn(f64) -> f64>(f: F, z: f64, what: &str) -> Result<f64, CoefficientError> {
    let h = fd_step(z);
    let d1 = (f(z + h) - f(z - h)) / (2.0 * h);
    let d2 = (f(z + 2.0 * h) - f(z - 2.0 * h)) / (4.0 * h);
    let f0 = f(z);
    let forward = (f(z + h) - f0) / h;
    let backward = (f0 - f(z - h)) / h;
    let rough = (d1 - d2).abs() > FD_SMOOTHNESS_TOL * (1.0 + d1.abs())
        || (forward - backward).abs() > ONE_SIDED_TOL * (1.0 + d1.abs());
    if !(d1.is_finite() && d2.is_finite()) || rough {
        return Err(CoefficientError::NonSmooth { what: what.to_string(), at: z, h_estimate: d1, h2_estimate: d2 });
    }
    Ok(d1)
}

const GL_NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL_WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

/// Composite 4-point Gauss–Legendre rule on `[a, b]` with `panels` panels.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = a + (k as f64 + 0.5) * w;
            GL_NODES.iter().zip(GL_WEIGHTS.iter()).map(|(&n, &wt)| wt * f(mid + 0.5 * w * n)).sum::<f64>() * 0.5 * w
        })
        .sum()
}
