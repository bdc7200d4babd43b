//! Sampling-based verification of the structural bounds on the transformed
//! coefficients and of the long-time coercivity condition.

use std::fmt;

use rayon::prelude::*;

use super::{CoefficientError, GradientCoefficients, Point, TransformedCoefficients, TransformedModel};

/// Closed ranges of `(t, x, u, ς)` over which coefficients are sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub t: [f64; 2],
    pub x: [f64; 2],
    pub u: [f64; 2],
    pub s: [f64; 2],
}

impl SampleBox {
    pub fn new(t: [f64; 2], x: [f64; 2], u: [f64; 2], s: [f64; 2]) -> Self {
        Self { t, x, u, s }
    }

    /// A box that pins `t` and `x` and spans the given `u`, `ς` ranges.
    pub fn state_box(u: [f64; 2], s: [f64; 2]) -> Self {
        Self { t: [0.0, 0.0], x: [0.0, 0.0], u, s }
    }

    fn axes(&self) -> [(&'static str, [f64; 2]); 4] {
        [("t", self.t), ("x", self.x), ("u", self.u), ("sigma", self.s)]
    }

    pub fn validate(&self) -> Result<(), CoefficientError> {
        for (axis, [lo, hi]) in self.axes() {
            if !(lo.is_finite() && hi.is_finite()) || hi < lo {
                return Err(CoefficientError::EmptyBox { axis });
            }
        }
        if self.axes().iter().all(|(_, [lo, hi])| lo == hi) {
            return Err(CoefficientError::ZeroVolumeBox);
        }
        Ok(())
    }

    /// Tensor grid with `n` points on every non-degenerate axis, in
    /// lexicographic `(t, x, u, ς)` order.
    pub fn grid(&self, n: usize) -> Vec<Point> {
        let axis = |[lo, hi]: [f64; 2]| -> Vec<f64> {
            if lo == hi || n == 1 {
                vec![lo]
            } else {
                (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
            }
        };
        let (ts, xs, us, ss) = (axis(self.t), axis(self.x), axis(self.u), axis(self.s));
        let mut points = Vec::with_capacity(ts.len() * xs.len() * us.len() * ss.len());
        for &t in &ts {
            for &x in &xs {
                for &u in &us {
                    for &s in &ss {
                        points.push(Point { t, x, u, s });
                    }
                }
            }
        }
        points
    }

    pub fn contains(&self, p: Point) -> bool {
        let within = |v: f64, [lo, hi]: [f64; 2]| v >= lo && v <= hi;
        within(p.t, self.t) && within(p.x, self.x) && within(p.u, self.u) && within(p.s, self.s)
    }
}

/// Empirical constants of the growth and ellipticity bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionBounds {
    pub k_d: f64,
    pub k_e: f64,
    pub k_beta: f64,
    pub k_mu: f64,
    pub k_f: f64,
    pub k_g: f64,
    /// Ellipticity constant: minimum of `D` over the samples.
    pub d: f64,
    /// Affine-bound intercepts, constant over `(t, x)`.
    pub f_tilde: f64,
    pub g_tilde: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub reason: String,
    /// Offending samples with the value that failed (capped).
    pub points: Vec<(Point, f64)>,
    pub count: usize,
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {} sample(s)", self.reason, self.count)?;
        if let Some((p, v)) = self.points.first() {
            write!(f, "; first at (t={}, x={}, u={}, sigma={}) with value {v}", p.t, p.x, p.u, p.s)?;
        }
        Ok(())
    }
}

const MAX_REPORTED_POINTS: usize = 16;

struct Sample {
    point: Point,
    c: TransformedCoefficients,
    grad: GradientCoefficients,
}

fn sample_model(model: &TransformedModel, points: &[Point]) -> Result<Vec<Sample>, CoefficientError> {
    // par_iter + collect keeps the sample order, so reductions are reproducible
    let sampled: Vec<Result<Sample, CoefficientError>> = points
        .par_iter()
        .map(|&point| {
            let c = model.eval(point);
            let partials = model.partials(point)?;
            let grad = GradientCoefficients::from_partials(&c, &partials, point.u, point.s);
            Ok(Sample { point, c, grad })
        })
        .collect();
    sampled.into_iter().collect()
}

/// Least-squares slope of `y` against `z`, clipped at zero, with the
/// smallest intercept that makes the affine bound hold on every sample.
fn affine_bound(z: &[f64], y: &[f64]) -> (f64, f64) {
    let n = z.len() as f64;
    let zm = z.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let szz: f64 = z.iter().map(|&a| (a - zm) * (a - zm)).sum();
    let szy: f64 = z.iter().zip(y).map(|(&a, &b)| (a - zm) * (b - ym)).sum();
    let slope = if szz > 0.0 { (szy / szz).max(0.0) } else { 0.0 };
    let intercept = z.iter().zip(y).map(|(&a, &b)| b - slope * a).fold(0.0, f64::max);
    (slope, intercept)
}

/// Samples the model on an `n_samples`-per-axis grid of `bx` and returns
/// the empirical bound constants, or the points where `D ≤ 0` (or any
/// coefficient is non-finite).
pub fn check_assumptions(
    model: &TransformedModel,
    bx: &SampleBox,
    n_samples: usize,
) -> Result<AssumptionBounds, CoefficientError> {
    if n_samples == 0 {
        return Err(CoefficientError::NoSamples);
    }
    bx.validate()?;
    let samples = sample_model(model, &bx.grid(n_samples))?;

    let finite = |s: &Sample| {
        [s.c.d, s.c.e, s.c.f, s.c.beta1, s.c.gamma, s.grad.beta, s.grad.mu, s.grad.g].iter().all(|v| v.is_finite())
    };
    let non_finite: Vec<(Point, f64)> = samples.iter().filter(|s| !finite(s)).map(|s| (s.point, s.c.d)).collect();
    if !non_finite.is_empty() {
        return Err(CoefficientError::AssumptionViolation(ViolationReport {
            reason: "non-finite coefficient value".into(),
            count: non_finite.len(),
            points: non_finite.into_iter().take(MAX_REPORTED_POINTS).collect(),
        }));
    }
    let elliptic_fail: Vec<(Point, f64)> = samples.iter().filter(|s| s.c.d <= 0.0).map(|s| (s.point, s.c.d)).collect();
    if !elliptic_fail.is_empty() {
        return Err(CoefficientError::AssumptionViolation(ViolationReport {
            reason: "diffusion coefficient D is not bounded below by a positive constant".into(),
            count: elliptic_fail.len(),
            points: elliptic_fail.into_iter().take(MAX_REPORTED_POINTS).collect(),
        }));
    }

    let max_abs = |f: &dyn Fn(&Sample) -> f64| samples.iter().map(|s| f(s).abs()).fold(0.0, f64::max);
    let growth: Vec<f64> = samples.iter().map(|s| s.point.u.abs() + s.point.s.abs()).collect();
    let abs_f: Vec<f64> = samples.iter().map(|s| s.c.f.abs()).collect();
    let abs_g: Vec<f64> = samples.iter().map(|s| s.grad.g.abs()).collect();
    let (k_f, f_tilde) = affine_bound(&growth, &abs_f);
    let (k_g, g_tilde) = affine_bound(&growth, &abs_g);

    Ok(AssumptionBounds {
        k_d: max_abs(&|s| s.c.d),
        k_e: max_abs(&|s| s.c.e),
        k_beta: max_abs(&|s| s.grad.beta).max(max_abs(&|s| s.c.gamma)),
        k_mu: max_abs(&|s| s.grad.mu).max(max_abs(&|s| s.c.beta1)),
        k_f,
        k_g,
        d: samples.iter().map(|s| s.c.d).fold(f64::INFINITY, f64::min),
        f_tilde,
        g_tilde,
        samples: samples.len(),
    })
}

/// Verified long-time coercivity constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongTimeCondition {
    pub gamma: f64,
    pub gamma_0: f64,
    pub verified_box: SampleBox,
}

impl LongTimeCondition {
    pub fn new(gamma: f64, gamma_0: f64, verified_box: SampleBox) -> Result<Self, CoefficientError> {
        if !(gamma > 0.0 && gamma_0 > 0.0) {
            return Err(CoefficientError::InvalidParameter {
                name: "Gamma".into(),
                reason: format!("Gamma and Gamma_0 must be positive, got {gamma} and {gamma_0}"),
            });
        }
        Ok(Self { gamma, gamma_0, verified_box })
    }
}

/// Smallest eigenvalue of `[[D, c/2], [c/2, −μ]]` with `c = EΓ − β/Γ`, the
/// symmetric matrix of the form `Dξ² − μη² + (EΓ − β/Γ)ξη`.
pub fn condition_min_eigenvalue(d: f64, e: f64, beta: f64, mu: f64, gamma: f64) -> f64 {
    let a = d;
    let b = -mu;
    let half_c = 0.5 * (e * gamma - beta / gamma);
    0.5 * (a + b) - (0.25 * (a - b) * (a - b) + half_c * half_c).sqrt()
}

fn worst_point(model: &TransformedModel, gamma: f64, points: &[Point]) -> Result<(f64, Point), CoefficientError> {
    let samples = sample_model(model, points)?;
    let mut worst = (f64::INFINITY, points[0]);
    for s in &samples {
        let lam = condition_min_eigenvalue(s.c.d, s.c.e, s.grad.beta, s.grad.mu, gamma);
        if lam < worst.0 || lam.is_nan() {
            worst = (lam, s.point);
        }
    }
    Ok(worst)
}

/// Returns `Γ₀`, the infimum over the sample grid of the minimum
/// eigenvalue of the long-time quadratic form, when it is positive.
pub fn check_longtime_condition(
    model: &TransformedModel,
    gamma: f64,
    bx: &SampleBox,
    n_samples: usize,
) -> Result<LongTimeCondition, CoefficientError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(CoefficientError::InvalidParameter { name: "Gamma".into(), reason: format!("must be positive, got {gamma}") });
    }
    if n_samples == 0 {
        return Err(CoefficientError::NoSamples);
    }
    bx.validate()?;
    let (eigenvalue, point) = worst_point(model, gamma, &bx.grid(n_samples))?;
    if eigenvalue > 0.0 {
        Ok(LongTimeCondition { gamma, gamma_0: eigenvalue, verified_box: *bx })
    } else {
        Err(CoefficientError::LongTimeFailure { gamma, eigenvalue, point })
    }
}

/// Scans `gamma_grid` and keeps the candidate with the largest `Γ₀`
/// (the first one on ties).
pub fn find_gamma(
    model: &TransformedModel,
    bx: &SampleBox,
    gamma_grid: &[f64],
    n_samples: usize,
) -> Result<LongTimeCondition, CoefficientError> {
    if gamma_grid.is_empty() || gamma_grid.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return Err(CoefficientError::InvalidGammaGrid);
    }
    if n_samples == 0 {
        return Err(CoefficientError::NoSamples);
    }
    bx.validate()?;
    let points = bx.grid(n_samples);
    let mut best: Option<(f64, f64)> = None;
    for &gamma in gamma_grid {
        let (lam, _) = worst_point(model, gamma, &points)?;
        if best.is_none_or(|(_, b)| lam > b) {
            best = Some((gamma, lam));
        }
    }
    let (gamma, gamma_0) = best.expect("grid is nonempty");
    if gamma_0 > 0.0 {
        Ok(LongTimeCondition { gamma, gamma_0, verified_box: *bx })
    } else {
        Err(CoefficientError::AllCandidatesFailed { best_gamma: gamma, best_eigenvalue: gamma_0 })
    }
}
