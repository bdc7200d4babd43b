use std::f64::consts::PI;
use std::fs;
use std::time::Instant;

use viscodiff::coefficients::{transform, PhysicalCoefficients, Profile, TanhLaw};
use viscodiff::config::{preset, FieldSpec, PRESET_NAMES};
use viscodiff::diagnostics::mass_balance_check;
use viscodiff::discretization::{assemble_mass, cosine_mode, BoundaryData, Influx, Mesh};
use viscodiff::linalg::dot;
use viscodiff::scenario::{read_snapshot, run_eps_scan, run_scenario, Scenario};
use viscodiff::solver::{reconstruct_sigma, run, InitialData, SolverConfig};

fn l2(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    dot(&d, &assemble_mass(mesh).matvec(&d)).sqrt()
}

fn fickian_final(mesh: &Mesh, dt: f64) -> Vec<f64> {
    let model = transform(PhysicalCoefficients::fickian(1.0));
    let init = InitialData::new(&model, cosine_mode(mesh, 1, 1.0), vec![0.0; mesh.node_count()]).unwrap();
    let cfg = SolverConfig { dt, t_end: 0.1, output_every: 1000, ..SolverConfig::default() };
    run(&init, mesh, &model, &BoundaryData::zero(), &cfg, 1.0).unwrap().final_state().u.clone()
}

#[test]
fn halving_dt_halves_the_temporal_error() {
    let mesh = Mesh::new(1.0, 64).unwrap();
    let [a, b, c] = [1e-2, 5e-3, 2.5e-3].map(|dt| fickian_final(&mesh, dt));
    let ratio = l2(&mesh, &a, &b) / l2(&mesh, &b, &c);
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn sine_influx_adds_its_integral() {
    let mesh = Mesh::new(1.0, 32).unwrap();
    let model = transform(PhysicalCoefficients::fickian(1.0));
    let init = InitialData::new(&model, vec![0.0; 33], vec![0.0; 33]).unwrap();
    let bd = BoundaryData::new(Influx::Sinusoid { offset: 0.0, amplitude: 1.0, omega: 1.0, phase: 0.0 }, Influx::Zero);
    let dt = PI / 2000.0;
    let cfg = SolverConfig { dt, t_end: PI, output_every: 100, ..SolverConfig::default() };
    let out = run(&init, &mesh, &model, &bd, &cfg, 1.0).unwrap();
    let gain = out.diagnostics.last().unwrap().mass - out.diagnostics[0].mass;
    assert!((gain - 2.0).abs() <= dt, "gain {gain}");
    let report = mass_balance_check(&out.diagnostics, &bd, 1e-10).unwrap();
    assert!(report.max_defect <= 1e-10);
}

#[test]
fn initial_stress_round_trips_through_the_transform() {
    let phys = PhysicalCoefficients {
        nu0: Profile::Tanh(TanhLaw { low: 0.1, high: 0.6, center: 0.5, width: 0.1 }),
        ..PhysicalCoefficients::fickian(1.0)
    };
    let model = transform(phys);
    let mesh = Mesh::new(1.0, 40).unwrap();
    let u0: Vec<f64> = mesh.nodes().iter().map(|x| x * x).collect();
    let sigma0: Vec<f64> = mesh.nodes().iter().map(|x| (5.0 * x).sin()).collect();
    let init = InitialData::new(&model, u0, sigma0.clone()).unwrap();
    let back = reconstruct_sigma(&init.state(), &model);
    for (a, b) in back.iter().zip(&sigma0) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn snapshot_feeds_back_as_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("sorption").unwrap();
    cfg.t_end = 0.5;
    cfg.output_every = 250;
    let report = run_scenario(&cfg, Some(dir.path())).unwrap();
    let path = dir.path().join("snapshot_500.csv");
    let snap = read_snapshot(&path).unwrap();
    assert_eq!(snap.u, report.final_state.u);
    assert!(dir.path().join("snapshot_500_flux.csv").exists());

    let mut again = cfg.clone();
    again.u0 = FieldSpec::File(path.clone());
    again.sigma0 = FieldSpec::File(path);
    again.t_end = 0.0;
    let state = Scenario::build(&again).unwrap().initial.state();
    for (a, b) in state.u.iter().zip(&report.final_state.u) {
        assert!((a - b).abs() <= 1e-12);
    }
    for (a, b) in state.varsigma.iter().zip(&report.final_state.varsigma) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn identical_configs_give_identical_diagnostics() {
    let mut cfg = preset("homogenize").unwrap();
    cfg.t_end = 5.0;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_scenario(&cfg, Some(a.path())).unwrap();
    run_scenario(&cfg, Some(b.path())).unwrap();
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("diagnostics.csv")).unwrap();
    assert_eq!(read(&a), read(&b));

    let mut scan = preset("eps-scan").unwrap();
    scan.t_end = 0.1;
    let first = run_eps_scan(&scan, None).unwrap();
    let second = run_eps_scan(&scan, None).unwrap();
    let key = |r: &viscodiff::scenario::EpsScanReport| {
        r.runs.iter().map(|x| (x.epsilon.to_bits(), x.distance.to_bits(), x.quantities.sup_h1_s.to_bits())).collect::<Vec<_>>()
    };
    assert_eq!(key(&first), key(&second));
}

#[test]
fn every_preset_passes_at_desk_scale() {
    for name in PRESET_NAMES {
        let cfg = preset(name).unwrap();
        let start = Instant::now();
        let dir = tempfile::tempdir().unwrap();
        let passed = if name == "eps-scan" {
            run_eps_scan(&cfg, Some(dir.path())).unwrap().passed()
        } else {
            let report = run_scenario(&cfg, Some(dir.path())).unwrap();
            for file in ["diagnostics.csv", "summary.txt"] {
                assert!(dir.path().join(file).exists(), "{name}: {file}");
            }
            report.passed()
        };
        assert!(passed, "{name}");
        assert!(start.elapsed().as_secs() < 120, "{name} took {:?}", start.elapsed());
    }
}
