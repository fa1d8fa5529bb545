use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use regge_ics::config::RunConfig;
use regge_ics::ics::closure_residual;
use regge_ics::pade::reconstruct;
use regge_ics::poles::{analyse_poles, contour_residue, residue_at};
use regge_ics::serve::serve_session;
use regge_ics::shell_model::{complex_j_pole_oracle, energy_grid, generate_dataset, PadeHeader, ShellModelParams};
use regge_ics::workflow::{list_energy_files, load_config, load_record, run_step_one, run_step_two, ScriptedChoices, TerminalChoices};
use regge_ics::{Error, Result};

#[derive(Parser)]
#[command(name = "regge-ics", version, about = "Regge pole analysis of integral cross sections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Reconstruct every energy, dump poles and cross sections.
    Step1 {
        #[arg(long)]
        config: PathBuf,
    },
    /// Follow one trajectory and subtract its Mulholland contribution.
    Step2 {
        #[arg(long)]
        config: PathBuf,
        /// Scripted choices, one pole index, `skip` or `auto` per line.
        #[arg(long)]
        choices: Option<PathBuf>,
    },
    /// Write energy files of the delta-shell hard-sphere model.
    Generate(GenerateArgs),
    /// Serve the Step II session over HTTP on localhost.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Check residues, closure and (for model data) poles against the oracle.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Model the data were generated from, for the complex-J oracle.
        #[arg(long, value_enum)]
        model: Option<Preset>,
        /// Oracle seed at the first energy as `re,im`.
        #[arg(long, value_parser = parse_complex)]
        seed: Option<Complex64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Bound,
    Meta,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    preset: Preset,
    /// Output directory; defaults to the data directory of `--config`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    e_min: Option<f64>,
    #[arg(long)]
    e_max: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    e_step: f64,
    #[arg(long, default_value_t = 30)]
    j_max: usize,
    /// Outer radius, Å.
    #[arg(long)]
    radius: Option<f64>,
    /// Well width, Å.
    #[arg(long)]
    width: Option<f64>,
    /// Well depth, meV.
    #[arg(long)]
    depth: Option<f64>,
    /// Barrier strength, meV·Å.
    #[arg(long)]
    omega: Option<f64>,
    /// Reduced mass, Da.
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    niter: Option<usize>,
    #[arg(long)]
    sht: Option<f64>,
    #[arg(long)]
    dxl: Option<f64>,
    /// Fixed last fitted partial wave; by default chosen per energy.
    #[arg(long)]
    jfin: Option<usize>,
    #[arg(long)]
    tail_floor: Option<f64>,
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let (re, im) = s.split_once(',').ok_or("expected `re,im`")?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok(Complex64::new(p(re)?, p(im)?))
}

impl Preset {
    fn params(self) -> ShellModelParams {
        match self {
            Preset::Bound => ShellModelParams::bound_example(),
            Preset::Meta => ShellModelParams::meta_example(),
        }
    }

    fn range(self) -> (f64, f64) {
        match self {
            Preset::Bound => (1.0, 100.0),
            Preset::Meta => (40.0, 100.0),
        }
    }

    fn seed(self) -> Complex64 {
        match self {
            Preset::Bound => Complex64::new(4.46, 1e-4),
            Preset::Meta => Complex64::new(0.195, 3.22),
        }
    }
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let dir = match (&a.out, &a.config) {
        (Some(d), _) => d.clone(),
        (None, Some(c)) => load_config(c)?.data_dir,
        (None, None) => return Err(Error::Usage("generate needs --out or --config".into())),
    };
    let mut p = a.preset.params();
    p.r = a.radius.unwrap_or(p.r);
    p.d = a.width.unwrap_or(p.d);
    p.v_well = a.depth.unwrap_or(p.v_well);
    p.omega_delta = a.omega.unwrap_or(p.omega_delta);
    p.mu = a.mass.unwrap_or(p.mu);
    let mut h = PadeHeader::default();
    h.niter = a.niter.unwrap_or(h.niter);
    h.sht = a.sht.unwrap_or(h.sht);
    h.dxl = a.dxl.unwrap_or(h.dxl);
    h.jfin = a.jfin;
    h.tail_floor = a.tail_floor.unwrap_or(h.tail_floor);
    let (lo, hi) = a.preset.range();
    let grid = energy_grid(a.e_min.unwrap_or(lo), a.e_max.unwrap_or(hi), a.e_step);
    let files = generate_dataset(&p, &grid, a.j_max, &h, &dir)?;
    println!("wrote {} energy files to {}", files.len(), dir.display());
    Ok(())
}

fn verify(config: &RunConfig, model: Option<Preset>, seed: Option<Complex64>) -> Result<bool> {
    let channel = config.channel()?;
    let mut ok = true;
    let mut guess = model.map(|m| seed.unwrap_or(m.seed()));
    println!("{:>10} {:>10} {:>10} {:>10} {:>12}", "E/meV", "fit_resid", "res_dev", "closure", "oracle_dist");
    for (index, path) in list_energy_files(&config.data_dir)? {
        let record = load_record(&path, config)?;
        if !config.selects(index, record.energy) {
            continue;
        }
        let built = reconstruct(&record, config)?;
        let m = &built.model;
        let poles = analyse_poles(m, &config.region, config.froissart_eps, record.energy)?;
        let mut res_dev: f64 = 0.0;
        for p in &poles {
            let i = m.poles.iter().position(|q| *q == p.position_j).expect("pole of the model");
            let direct = residue_at(m, i)?;
            let nearest = m.poles.iter().filter(|q| **q != p.position_j).map(|q| (q - p.position_j).norm()).fold(1.0, f64::min);
            let contour = contour_residue(|j| m.eval(j), p.position_j, (nearest / 4.0).min(1e-3), 64)?;
            res_dev = res_dev.max((direct - contour).norm() / direct.norm());
        }
        let closure = if channel.elastic && channel.j_min() == 0 {
            format!("{:10.2e}", closure_residual(m, &record, &channel, 10.0, 2.0)?)
        } else {
            format!("{:>10}", "-")
        };
        let oracle = match (model, guess) {
            (Some(pm), Some(g)) => {
                let mut params = pm.params();
                params.mu = config.reduced_mass;
                let o = complex_j_pole_oracle(&params, record.energy, g)?;
                guess = Some(o);
                let d = m.poles.iter().map(|q| (q - o).norm()).fold(f64::INFINITY, f64::min);
                format!("{d:12.2e}")
            }
            _ => format!("{:>12}", "-"),
        };
        ok &= built.working_residual <= 1e-8 && res_dev <= 1e-6;
        println!(
            "{:>10} {:10.2e} {:10.2e} {closure} {oracle}",
            record.energy, built.working_residual, res_dev
        );
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Step1 { config } => {
            let c = load_config(&config)?;
            let s = run_step_one(&c)?;
            println!(
                "analysed {} energies ({} failed); outputs in {}",
                s.results.len(),
                s.failures.len(),
                c.output_dir.display()
            );
            Ok(true)
        }
        Command::Step2 { config, choices } => {
            let c = load_config(&config)?;
            let session = match choices {
                Some(path) => run_step_two(&c, &mut ScriptedChoices::from_file(&path)?)?,
                None => {
                    let stdin = io::stdin();
                    run_step_two(&c, &mut TerminalChoices::new(stdin.lock(), io::stdout()))?
                }
            };
            let t = session.completed_trajectories.last().expect("Step II completes a trajectory");
            println!(
                "trajectory {} with {} poles ({} gaps); outputs in {}",
                t.id,
                t.entries.len(),
                t.gaps.len(),
                c.output_dir.display()
            );
            Ok(true)
        }
        Command::Generate(a) => generate(&a).map(|_| true),
        Command::Serve { config, port } => serve_session(&load_config(&config)?, port).map(|_| true),
        Command::Verify { config, model, seed } => verify(&load_config(&config)?, model, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
