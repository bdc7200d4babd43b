use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use viscodiff::coefficients::{find_gamma, CoefficientError};
use viscodiff::config::{load_config, preset, preset_text, ConfigError, GammaChoice, ScenarioConfig, PRESET_NAMES};
use viscodiff::scenario::{run_eps_scan, run_scenario, Scenario, ScenarioError};

#[derive(Parser)]
#[command(name = "viscodiff", version, about = "Non-Fickian diffusion with viscoelastic stress in one dimension")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a built-in scenario (or print its config with --print).
    Preset {
        /// One of: fickian, case2-front, sorption, desorption, homogenize, eps-scan.
        name: String,
        /// Print the preset config instead of running it.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Sample the coefficients and report the growth bounds and, with a
    /// longtime section, the long-time condition.
    CheckAssumptions {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Search the longtime gamma grid for the best weight.
    FindGamma {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the scenario at every eps_scan value and at epsilon = 0.
    EpsScan {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Args, Clone)]
struct Overrides {
    /// Override time.dt.
    #[arg(long)]
    dt: Option<f64>,
    /// Override mesh.N.
    #[arg(long = "n-cells")]
    n_cells: Option<usize>,
}

#[derive(Args, Clone)]
struct RunOpts {
    /// Output directory [default: out/<name>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only print the verdict line.
    #[arg(long)]
    quiet: bool,
    #[command(flatten)]
    overrides: Overrides,
}

enum Failure {
    Config(String),
    Check(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Check(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e.exit_code() {
            3 => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig, Failure> {
    let mut cfg = load_config(path)?;
    apply(&mut cfg, overrides)?;
    Ok(cfg)
}

fn apply(cfg: &mut ScenarioConfig, overrides: &Overrides) -> Result<(), Failure> {
    if let Some(n) = overrides.n_cells {
        cfg.override_cells(n)?;
    }
    if let Some(dt) = overrides.dt {
        cfg.override_dt(dt)?;
    }
    Ok(())
}

fn out_dir(cfg: &ScenarioConfig, opts: &RunOpts) -> PathBuf {
    opts.out.clone().unwrap_or_else(|| Path::new("out").join(&cfg.name))
}

fn run(cfg: &ScenarioConfig, opts: &RunOpts) -> Result<(), Failure> {
    let dir = out_dir(cfg, opts);
    let report = run_scenario(cfg, Some(&dir))?;
    if opts.quiet {
        println!("{}: {}", report.name, if report.passed() { "PASS" } else { "FAIL" });
    } else {
        print!("{}", report.summary());
        println!("outputs: {}", dir.display());
    }
    match report.checks.iter().find(|c| c.verdict != viscodiff::scenario::Verdict::Pass) {
        None => Ok(()),
        Some(c) => Err(Failure::Check(format!("check {} failed: {}", c.name, c.detail))),
    }
}

fn check_assumptions(cfg: &ScenarioConfig) -> Result<(), Failure> {
    let sc = Scenario::build(cfg)?;
    let bx = sc.sample_box();
    println!("sample box: t {:?}, x {:?}, u {:?}, varsigma {:?}", bx.t, bx.x, bx.u, bx.s);
    match sc.check_assumptions() {
        Ok(b) => {
            println!("samples: {}", b.samples);
            println!("D >= {:e}", b.d);
            println!("|D| <= {:e}", b.k_d);
            println!("|E| <= {:e}", b.k_e);
            println!("|beta|, |gamma| <= {:e}", b.k_beta);
            println!("|mu|, |beta1| <= {:e}", b.k_mu);
            println!("|f| <= {:e}(|u| + |varsigma|) + {:e}", b.k_f, b.f_tilde);
            println!("|g| <= {:e}(|u| + |varsigma|) + {:e}", b.k_g, b.g_tilde);
        }
        Err(ScenarioError::Coefficient(e @ CoefficientError::AssumptionViolation(_))) => {
            return Err(Failure::Check(e.to_string()));
        }
        Err(e) => return Err(e.into()),
    }
    match sc.longtime_condition() {
        None => Ok(()),
        Some(Ok(lt)) => {
            println!("long-time condition holds: Gamma = {:e}, Gamma_0 = {:e}", lt.gamma, lt.gamma_0);
            Ok(())
        }
        Some(Err(e)) => Err(Failure::Check(e.to_string())),
    }
}

fn find_gamma_cmd(cfg: &ScenarioConfig) -> Result<(), Failure> {
    let sc = Scenario::build(cfg)?;
    let (grid, samples) = match &cfg.longtime {
        Some(lt) => (
            match &lt.gamma {
                GammaChoice::Grid(g) => g.clone(),
                GammaChoice::Fixed(g) => vec![*g],
            },
            lt.samples,
        ),
        None => ((0..=40).map(|k| 10f64.powf(-2.0 + 0.1 * k as f64)).collect(), 21),
    };
    match find_gamma(&sc.model, &sc.sample_box(), &grid, samples) {
        Ok(lt) => {
            println!("Gamma = {:e}", lt.gamma);
            println!("Gamma_0 = {:e}", lt.gamma_0);
            Ok(())
        }
        Err(e @ (CoefficientError::AllCandidatesFailed { .. } | CoefficientError::LongTimeFailure { .. })) => {
            Err(Failure::Check(e.to_string()))
        }
        Err(e) => Err(Failure::Config(e.to_string())),
    }
}

fn eps_scan(cfg: &ScenarioConfig, opts: &RunOpts) -> Result<(), Failure> {
    let dir = out_dir(cfg, opts);
    let report = run_eps_scan(cfg, Some(&dir))?;
    if opts.quiet {
        println!("{}: {}", cfg.name, if report.passed() { "PASS" } else { "FAIL" });
    } else {
        print!("{}", report.summary());
        println!("outputs: {}", dir.display());
    }
    match report.checks.iter().find(|c| c.verdict != viscodiff::scenario::Verdict::Pass) {
        None => Ok(()),
        Some(c) => Err(Failure::Check(format!("check {} failed: {}", c.name, c.detail))),
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, opts } => run(&load(&config, &opts.overrides)?, &opts),
        Command::Preset { name, print, opts } => {
            let Some(text) = preset_text(&name) else {
                return Err(Failure::Config(format!("unknown preset `{name}`; available: {}", PRESET_NAMES.join(", "))));
            };
            if print {
                print!("{text}");
                return Ok(());
            }
            let mut cfg = preset(&name)?;
            apply(&mut cfg, &opts.overrides)?;
            if name == "eps-scan" {
                eps_scan(&cfg, &opts)
            } else {
                run(&cfg, &opts)
            }
        }
        Command::CheckAssumptions { config, overrides } => check_assumptions(&load(&config, &overrides)?),
        Command::FindGamma { config, overrides } => find_gamma_cmd(&load(&config, &overrides)?),
        Command::EpsScan { config, opts } => eps_scan(&load(&config, &opts.overrides)?, &opts),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
