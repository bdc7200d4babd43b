//! Acceptance suite: one PASS/FAIL line per criterion. Phenomenology
//! probes print INFO lines and never fail the run.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::Matrix2;
use rand::{rngs::StdRng, Rng, SeedableRng};
use viscodiff::coefficients::{
    check_longtime_condition, eval_beta0, eval_e0, transform, Coefficient, GlassRubberParams, PhysicalCoefficients,
    Point, Profile, SampleBox, StressDiffusionParams, TransformedModel,
};
use viscodiff::config::preset;
use viscodiff::discretization::{assemble_mass, cosine_mode, BoundaryData, Influx, Mesh};
use viscodiff::linalg::dot;
use viscodiff::scenario::{run_eps_scan, run_scenario, Verdict};
use viscodiff::solver::{run, InitialData, SolverConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn l2(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    dot(&d, &assemble_mass(mesh).matvec(&d)).max(0.0).sqrt()
}

/// Heat equation with a cosine mode; `(max error vs the exact solution,
/// final error vs the time-discrete exact solution)`.
fn fickian_errors(cells: usize) -> (f64, f64) {
    let mesh = Mesh::new(1.0, cells).unwrap();
    let model = transform(PhysicalCoefficients::fickian(1.0));
    let init = InitialData::new(&model, cosine_mode(&mesh, 1, 1.0), vec![0.0; cells + 1]).unwrap();
    let dt = 1e-4;
    let cfg = SolverConfig { dt, t_end: 0.1, output_every: 100, ..Default::default() };
    let out = run(&init, &mesh, &model, &BoundaryData::zero(), &cfg, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for s in &out.trajectory {
        let exact: Vec<f64> = mesh.nodes().iter().map(|&x| (-PI * PI * s.t).exp() * (PI * x).cos()).collect();
        worst = worst.max(l2(&mesh, &s.u, &exact));
    }
    let last = out.final_state();
    let n = (last.t / dt).round() as i32;
    let damping = (1.0 + PI * PI * dt).powi(-n);
    let time_discrete: Vec<f64> = mesh.nodes().iter().map(|&x| damping * (PI * x).cos()).collect();
    (worst, l2(&mesh, &last.u, &time_discrete))
}

fn fickian_limit() -> Outcome {
    let (err_256, spatial_256) = fickian_errors(256);
    let (_, spatial_512) = fickian_errors(512);
    let ratio = spatial_256 / spatial_512;
    outcome(
        err_256 <= 5e-3 && (3.6..=4.4).contains(&ratio),
        format!(
            "max L2 error {err_256:.3e} (tol 5e-3); spatial error {spatial_256:.3e} -> {spatial_512:.3e} under N 256 -> 512, ratio {ratio:.3}"
        ),
    )
}

fn non_fickian_model() -> PhysicalCoefficients {
    PhysicalCoefficients {
        d0: Coefficient::of_u(Profile::Tanh(viscodiff::coefficients::TanhLaw { low: 0.2, high: 1.0, center: 0.5, width: 0.1 })),
        e0: Coefficient::of_u(Profile::Cohen(StressDiffusionParams::new(0.5, 0.1).unwrap().law())),
        m0: Coefficient::constant(0.3),
        beta0: Coefficient::of_u(Profile::Tanh(GlassRubberParams::new(3.0, 1.0, 0.1, 0.5).unwrap().law())),
        mu0: Profile::Constant(0.5),
        nu0: Profile::Constant(0.2),
    }
}

fn mass_balance() -> Outcome {
    let mesh = Mesh::new(1.0, 16).unwrap();
    let model = transform(non_fickian_model());
    let u0: Vec<f64> = cosine_mode(&mesh, 1, 0.3).iter().map(|v| v + 0.5).collect();
    let s0 = cosine_mode(&mesh, 2, 0.2);
    let init = InitialData::new(&model, u0, s0).unwrap();
    let cfg = SolverConfig { dt: 1e-3, t_end: 100.0, output_every: 100_000, ..Default::default() };
    let out = run(&init, &mesh, &model, &BoundaryData::zero(), &cfg, 1.0).unwrap();
    let m0 = out.diagnostics[0].mass;
    let closed_drift =
        out.diagnostics.iter().map(|r| (r.mass - m0).abs()).fold(0.0, f64::max) / m0.abs();
    let closed_steps = out.diagnostics.len() - 1;

    let bd = BoundaryData::new(Influx::Constant(1.0), Influx::Zero);
    let cfg = SolverConfig { dt: 1e-3, t_end: 1.0, output_every: 1000, ..Default::default() };
    let out = run(&init, &mesh, &model, &bd, &cfg, 1.0).unwrap();
    let gain = out.diagnostics.last().unwrap().mass - out.diagnostics[0].mass;
    outcome(
        closed_steps == 100_000 && closed_drift <= 1e-10 && (gain - 1.0).abs() <= 1e-10,
        format!("{closed_steps} closed steps, relative drift {closed_drift:.3e}; unit influx over T = 1 gains {gain:.15} (|gain - 1| = {:.3e})", (gain - 1.0).abs()),
    )
}

fn homogenization() -> Outcome {
    let cfg = preset("homogenize").unwrap();
    let report = run_scenario(&cfg, None).unwrap();
    let verdict = |name: &str| report.check(name).map(|c| c.verdict == Verdict::Pass).unwrap_or(false);
    let gamma_0 = report.longtime.as_ref().map_or(f64::NAN, |lt| lt.gamma_0);
    let below = report.check("homogenization").map_or(String::new(), |c| c.detail.clone());
    let decay = report.check("lyapunov-decay").map_or(String::new(), |c| c.detail.clone());
    outcome(
        gamma_0 > 0.0 && verdict("longtime-condition") && verdict("lyapunov-decay") && verdict("homogenization") && cfg.t_end <= 50.0,
        format!("Gamma_0 = {gamma_0:.4e}; {decay}; {below}"),
    )
}

fn eps_scaling() -> Outcome {
    let report = run_eps_scan(&preset("eps-scan").unwrap(), None).unwrap();
    let eps_h2: Vec<String> = report.runs.iter().map(|r| format!("{:.0e}: {:.3e}", r.epsilon, r.quantities.eps_h2_u)).collect();
    let dist: Vec<String> = report.runs.iter().map(|r| format!("{:.0e}: {:.3e}", r.epsilon, r.distance)).collect();
    let reference = &report.runs[0].quantities;
    let h2_bounded = report.runs.iter().all(|r| {
        r.quantities.eps_h2_u <= 1.1 * reference.eps_h2_u && r.quantities.eps_xn_s <= 1.1 * reference.eps_xn_s
    });
    let monotone = report.runs.windows(2).all(|w| w[1].distance < w[0].distance);
    outcome(
        report.h1_spread <= 1.1 && h2_bounded && monotone && report.passed(),
        format!(
            "sup H1(varsigma) spread {:.4}; eps*sum H2(u) {}; distance to eps = 0 {}",
            report.h1_spread,
            eps_h2.join(", "),
            dist.join(", ")
        ),
    )
}

fn coefficient_identities() -> Outcome {
    let p = GlassRubberParams::new(2.0, 1.0, 0.1, 0.4).unwrap();
    let mid = (eval_beta0(0.4, &p) - 1.5).abs();
    let e = StressDiffusionParams::new(0.7, 0.2).unwrap();
    let ends = (eval_e0(0.0, &e), eval_e0(1.0, &e));

    let (m, b, c) = (0.7, 1.3, 0.4);
    let constant = transform(PhysicalCoefficients {
        beta0: Coefficient::constant(b),
        mu0: Profile::Constant(m),
        nu0: Profile::Constant(c),
        ..PhysicalCoefficients::fickian(1.0)
    });
    let us: Vec<f64> = (0..=1000).map(|k| k as f64 * 1e-6).chain([1e-9, 5e-9, 1e-8, 2e-8]).collect();
    let exact_dev = us.iter().map(|&u| (constant.gamma(Point::new(0.0, 0.0, u, 0.0)) - (m - b * c)).abs()).fold(0.0, f64::max);

    // β₀ varying in u: γ(u) − γ(0) = −c(β₀(u) − β₀(0)), Lipschitz with constant c·max|β₀'|
    let varying = transform(PhysicalCoefficients {
        beta0: Coefficient::of_u(Profile::Tanh(p.law())),
        mu0: Profile::Constant(m),
        nu0: Profile::Constant(c),
        ..PhysicalCoefficients::fickian(1.0)
    });
    let lip = c * 0.5 * (p.beta_r - p.beta_g) / p.delta;
    let g0 = varying.gamma(Point::new(0.0, 0.0, 0.0, 0.0));
    let continuity = us
        .iter()
        .filter(|&&u| u > 0.0)
        .map(|&u| (varying.gamma(Point::new(0.0, 0.0, u, 0.0)) - g0).abs() / u)
        .fold(0.0, f64::max);
    outcome(
        mid <= 1e-14 && ends == (0.0, 0.0) && exact_dev <= 1e-14 && continuity <= lip,
        format!(
            "|beta0(u_RG) - mid| = {mid:.1e}; E0(0), E0(1) = {:?}, {:?}; max |gamma - (m - b c)| = {exact_dev:.1e}; max |gamma(u) - gamma(0)|/u = {continuity:.4} <= {lip:.4}",
            ends.0, ends.1
        ),
    )
}

/// Fourth-order central difference.
fn d4(f: impl Fn(f64) -> f64, z: f64, h: f64) -> f64 {
    (f(z - 2.0 * h) - 8.0 * f(z - h) + 8.0 * f(z + h) - f(z + 2.0 * h)) / (12.0 * h)
}

/// Absolute size below which the stencil cannot resolve a value.
const STENCIL_FLOOR: f64 = 1e-10;

/// Worst relative deviation of the analytic gradient coefficients from a
/// fourth-order difference oracle over `n` random points.
fn gradient_deviation(model: &TransformedModel, n: usize, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let p = Point::new(0.0, rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0));
        let g = model.gradient_coefficients(p).unwrap();
        let (u, s) = (p.u, p.s);
        let b1 = |q: Point| model.beta1(q);
        let ga = |q: Point| model.gamma(q);
        let h = 1e-4;
        let db1_du = d4(|z| b1(Point { u: z, ..p }), u, h);
        let db1_ds = d4(|z| b1(Point { s: z, ..p }), s, h);
        let db1_dx = d4(|z| b1(Point { x: z, ..p }), p.x, h);
        let dg_du = d4(|z| ga(Point { u: z, ..p }), u, h);
        let dg_ds = d4(|z| ga(Point { s: z, ..p }), s, h);
        let dg_dx = d4(|z| ga(Point { x: z, ..p }), p.x, h);
        let beta = db1_du * s + ga(p) + dg_du * u;
        let mu = b1(p) + db1_ds * s + dg_ds * u;
        let gg = db1_dx * s + dg_dx * u;
        for (a, o) in [(g.beta, beta), (g.mu, mu), (g.g, gg)] {
            let scale = a.abs().max(o.abs());
            let rel = if scale < STENCIL_FLOOR { (a - o).abs() / STENCIL_FLOOR * 1e-6 } else { (a - o).abs() / scale };
            worst = worst.max(rel);
        }
    }
    worst
}

fn gradient_oracle() -> Outcome {
    let base = non_fickian_model();
    let law = GlassRubberParams::new(3.0, 1.0, 0.1, 0.5).unwrap().law();
    let modulated = PhysicalCoefficients {
        beta0: Coefficient::field(
            "tanh(u)*(1 + 0.2 sin(pi x))",
            move |p| law.value(p.u) * (1.0 + 0.2 * (PI * p.x).sin()),
            Some(Box::new(move |p: Point| {
                let m = 1.0 + 0.2 * (PI * p.x).sin();
                [0.0, law.value(p.u) * 0.2 * PI * (PI * p.x).cos(), law.derivative(p.u) * m, 0.0]
            })),
        ),
        ..base.clone()
    };
    let plain = gradient_deviation(&transform(base), 100, 20_240_601);
    let with_x = gradient_deviation(&transform(modulated), 100, 20_240_602);
    outcome(
        plain <= 1e-6 && with_x <= 1e-6,
        format!("100 random points, worst relative deviation {plain:.3e}; with x-modulated beta0 {with_x:.3e} (tol 1e-6)"),
    )
}

fn constant_model(d: f64, e: f64, beta: f64, mu: f64) -> TransformedModel {
    transform(PhysicalCoefficients {
        d0: Coefficient::constant(d),
        e0: Coefficient::constant(e),
        m0: Coefficient::constant(0.0),
        beta0: Coefficient::constant(-mu),
        mu0: Profile::Constant(beta),
        nu0: Profile::Constant(0.0),
    })
}

fn eigen_oracle(d: f64, e: f64, beta: f64, mu: f64, gamma: f64) -> f64 {
    let c = e * gamma - beta / gamma;
    let m = Matrix2::new(d, 0.5 * c, 0.5 * c, -mu);
    m.symmetric_eigenvalues().min()
}

fn longtime_checker() -> Outcome {
    let bx = SampleBox::state_box([0.0, 1.0], [-1.0, 1.0]);
    let mut details = Vec::new();
    let mut pass = true;
    for (e, beta, expected) in [(0.5, 0.5, 1.0), (1.0, 0.0, 0.5)] {
        let lt = check_longtime_condition(&constant_model(1.0, e, beta, -1.0), 1.0, &bx, 5).unwrap();
        let oracle = eigen_oracle(1.0, e, beta, -1.0, 1.0);
        pass &= (lt.gamma_0 - expected).abs() <= 1e-12 && (oracle - expected).abs() <= 1e-12;
        details.push(format!("E = {e}, beta = {beta}: Gamma_0 = {:.15} (eigen oracle {oracle:.15})", lt.gamma_0));
    }
    outcome(pass, details.join("; "))
}

fn phenomenology() -> Vec<String> {
    let mut lines = Vec::new();
    for name in ["sorption", "desorption", "case2-front"] {
        let report = run_scenario(&preset(name).unwrap(), None).unwrap();
        for s in &report.signatures {
            lines.push(format!("{name}: {} signature detected: {} ({})", s.name, if s.detected { "yes" } else { "no" }, s.detail));
        }
    }
    lines
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("fickian limit", fickian_limit),
        ("discrete mass balance", mass_balance),
        ("long-time homogenization", homogenization),
        ("epsilon-regularization scaling", eps_scaling),
        ("coefficient identities", coefficient_identities),
        ("gradient-coefficient oracle", gradient_oracle),
        ("long-time condition checker", longtime_checker),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        failures += usize::from(!o.pass);
        println!(
            "{} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    for line in phenomenology() {
        println!("INFO {line}");
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
