//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Data are generated from the delta-shell model.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::{Complex, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regge_ics::config::RunConfig;
use regge_ics::data::{read_series, SMatrixRecord};
use regge_ics::ics::{closure_residual, geometric_identity_residual};
use regge_ics::mp::{from_c64, MpReal, PrecisionGuard};
use regge_ics::pade::{build_interpolant, reconstruct, PadeModel};
use regge_ics::poles::{analyse_poles, contour_residue};
use regge_ics::serve::start;
use regge_ics::shell_model::{bound_state_energies, complex_j_pole_oracle, ShellModelParams};
use regge_ics::trajectory::ReggeTrajectory;
use regge_ics::workflow::{list_energy_files, load_record, open_session, persist, run_step_one, run_step_two, ScriptedChoices};
use regge_ics::Result;

const EXACT_DOUBLE: f64 = 1e-8;
const EXACT_EXTENDED: f64 = 1e-30;
const RECOVERY: f64 = 1e-8;
const POLE_RE: f64 = 4.85;
const POLE_RE_TOL: f64 = 0.1;
const ORACLE: f64 = 1e-4;
const ORACLE_ENERGIES: [f64; 10] = [1.0, 12.0, 23.0, 34.0, 45.0, 56.0, 67.0, 78.0, 89.0, 100.0];
const ORACLE_SEED: Complex64 = Complex64::new(4.85, 0.0043);
const BOUND_STATE: f64 = -14.0;
const BOUND_STATE_TOL: f64 = 2.0;
const SMOOTHING: f64 = 0.5;
const DOMINANT_SHARE: f64 = 0.1;
const RESIDUE: f64 = 1e-6;
const CLOSURE: f64 = 1e-3;
const CLOSURE_ENERGIES: [f64; 5] = [1.0, 25.0, 50.0, 75.0, 100.0];
const BOOKKEEPING: f64 = 1e-12;
const GEOMETRIC: f64 = 1e-10;

struct Line {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn line(name: &'static str, outcome: Result<(bool, String)>) -> Line {
    match outcome {
        Ok((pass, detail)) => Line { name, pass, detail },
        Err(e) => Line {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

/// A generated dataset with its double-precision reconstructions.
struct Fitted {
    config: RunConfig,
    records: Vec<SMatrixRecord>,
    models: Vec<PadeModel>,
    worst_double: f64,
    worst_extended: f64,
}

impl Fitted {
    fn at(&self, energy: f64) -> Option<(&SMatrixRecord, &PadeModel)> {
        self.records
            .iter()
            .position(|r| (r.energy - energy).abs() < 1e-9)
            .map(|i| (&self.records[i], &self.models[i]))
    }
}

fn fit_dataset(config: RunConfig) -> Result<Fitted> {
    let extended = RunConfig {
        use_extended_precision: true,
        precision_digits: 64,
        ..config.clone()
    };
    let mut f = Fitted {
        config,
        records: Vec::new(),
        models: Vec::new(),
        worst_double: 0.0,
        worst_extended: 0.0,
    };
    for (_, path) in list_energy_files(&f.config.data_dir)? {
        let record = load_record(&path, &f.config)?;
        let double = reconstruct(&record, &f.config)?;
        let ext = reconstruct(&record, &extended)?;
        f.worst_double = f.worst_double.max(double.working_residual);
        f.worst_extended = f.worst_extended.max(ext.working_residual);
        f.records.push(record);
        f.models.push(double.model);
    }
    Ok(f)
}

fn exactness(sets: &[&Fitted]) -> (bool, String) {
    let d = sets.iter().map(|f| f.worst_double).fold(0.0, f64::max);
    let e = sets.iter().map(|f| f.worst_extended).fold(0.0, f64::max);
    let n: usize = sets.iter().map(|f| f.records.len()).sum();
    (
        d <= EXACT_DOUBLE && e <= EXACT_EXTENDED,
        format!("{n} files, worst double {d:.2e} (tol {EXACT_DOUBLE:.0e}), worst 64-digit {e:.2e} (tol {EXACT_EXTENDED:.0e})"),
    )
}

fn random_root(rng: &mut ChaCha8Rng) -> Complex64 {
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    Complex64::new(rng.random_range(-14.0..14.0), sign * rng.random_range(0.05..3.0))
}

fn nearest(list: &[Complex64], z: Complex64) -> f64 {
    list.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Rationals with random roots sampled exactly at J = -15..15 and rebuilt
/// at 64 digits; every root must come back, and no extra ones.
fn rational_recovery() -> Result<(bool, String)> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let _g = PrecisionGuard::new(64);
    let (mut worst, mut failed): (f64, usize) = (0.0, 0);
    for _ in 0..100 {
        let zs: Vec<Complex64> = (0..rng.random_range(0..=14usize)).map(|_| random_root(&mut rng)).collect();
        let ps: Vec<Complex64> = (0..rng.random_range(0..=14usize)).map(|_| random_root(&mut rng)).collect();
        let k = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        let points: Vec<(f64, Complex<MpReal>)> = (-15..=15)
            .map(|j| {
                let jc: Complex<MpReal> = from_c64(Complex64::new(j as f64, 0.0));
                let mut v: Complex<MpReal> = from_c64(k);
                for z in &zs {
                    v = v * (jc.clone() - from_c64::<MpReal>(*z));
                }
                for p in &ps {
                    v = v / (jc.clone() - from_c64::<MpReal>(*p));
                }
                (j as f64, v)
            })
            .collect();
        let err = match build_interpolant::<MpReal>(&points, 0.0) {
            Ok(m) => {
                let m = m.to_f64();
                if m.zeros.len() != zs.len() || m.poles.len() != ps.len() {
                    f64::INFINITY
                } else {
                    zs.iter()
                        .map(|z| nearest(&m.zeros, *z))
                        .chain(ps.iter().map(|p| nearest(&m.poles, *p)))
                        .fold(0.0, f64::max)
                }
            }
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
        failed += usize::from(err.is_nan() || err > RECOVERY);
    }
    Ok((
        failed == 0,
        format!(
            "{failed}/100 failed, worst root error {worst:.2e} (tol {RECOVERY:.0e}), {:.1} s",
            started.elapsed().as_secs_f64()
        ),
    ))
}

fn example_one_pole(bound: &Fitted, params: &ShellModelParams) -> Result<(bool, String)> {
    let c = &bound.config;
    let mut lowest = None;
    for (r, m) in bound.records.iter().zip(&bound.models) {
        let poles = analyse_poles(m, &c.region, c.froissart_eps, r.energy)?;
        let best = poles
            .iter()
            .map(|p| p.position_j)
            .min_by(|a, b| (a.re - POLE_RE).abs().total_cmp(&(b.re - POLE_RE).abs()));
        if let Some(p) = best {
            lowest = Some((r.energy, p));
            break;
        }
    }
    let (e_low, p_low) = lowest.ok_or_else(|| regge_ics::Error::Validation("no retained pole at any energy".into()))?;
    let lowest_ok = (p_low.re - POLE_RE).abs() <= POLE_RE_TOL && p_low.im > 0.001 && p_low.im < 0.01;

    let mut guess = ORACLE_SEED;
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for e in 1..=100 {
        let e = e as f64;
        guess = complex_j_pole_oracle(params, e, guess)?;
        if ORACLE_ENERGIES.contains(&e) {
            let (_, m) = bound.at(e).ok_or_else(|| regge_ics::Error::Validation(format!("no data at {e} meV")))?;
            let d = nearest(&m.poles, guess);
            worst = worst.max(d);
            if d > ORACLE {
                misses.push(format!("{e}:{d:.1e}"));
            }
        }
    }
    Ok((
        lowest_ok && misses.is_empty(),
        format!(
            "lowest pole at {e_low} meV is {:.4}{:+.4}i (|dRe| {:.3}, tol {POLE_RE_TOL}; Im in (0.001, 0.01)); \
             oracle worst {worst:.2e} (tol {ORACLE:.0e}), misses [{}]",
            p_low.re,
            p_low.im,
            (p_low.re - POLE_RE).abs(),
            misses.join(" ")
        ),
    ))
}

fn bound_state(params: &ShellModelParams) -> Result<(bool, String)> {
    let states = bound_state_energies(params)?;
    let hit = states.iter().find(|e| (*e - BOUND_STATE).abs() <= BOUND_STATE_TOL);
    Ok((
        hit.is_some(),
        format!("J = 0 bound states {states:.2?} meV, wanted {BOUND_STATE} +- {BOUND_STATE_TOL}"),
    ))
}

/// `(E, value)` of the first column of a series file.
fn column(path: &Path) -> Result<BTreeMap<u64, (f64, f64)>> {
    Ok(read_series(path)?
        .into_iter()
        .map(|p| (p.energy.to_bits(), (p.energy, p.values[0])))
        .collect())
}

/// Worst relative deviation of smooth + Σ mull from exact for one output
/// directory; `exact_dir` holds the Step I files.
fn bookkeeping_deviation(out: &Path, exact_dir: &Path) -> Result<f64> {
    let exact = column(&exact_dir.join("ics.exact"))?;
    let smooth = column(&out.join("ics.smooth"))?;
    let mut mull: Vec<BTreeMap<u64, (f64, f64)>> = Vec::new();
    for p in common::output_files(out) {
        if p.file_name().unwrap().to_string_lossy().starts_with("ics.mull.") {
            mull.push(column(&p)?);
        }
    }
    let mut worst: f64 = 0.0;
    for (key, (e, x)) in &exact {
        let s = smooth
            .get(key)
            .ok_or_else(|| regge_ics::Error::Validation(format!("ics.smooth lacks {e} meV")))?
            .1;
        let m: f64 = mull.iter().filter_map(|t| t.get(key)).map(|v| v.1).sum();
        worst = worst.max((s + m - x).abs() / x.abs().max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

struct MetaRun {
    line: (bool, String),
    outputs: Vec<std::path::PathBuf>,
}

/// Follows every retained pole of the first energy in its own output
/// directory and checks the dominant trajectory's smoothing.
fn meta_type_two(meta: &RunConfig, root: &Path) -> Result<MetaRun> {
    let mut config = meta.clone();
    config.e_min = 43.0;
    config.region.y_min = 0.01;
    config.output_dir = root.join("meta_step1");
    fs::create_dir_all(&config.output_dir).map_err(|e| regge_ics::Error::io("mkdir", e))?;
    let step_one = run_step_one(&config)?;
    let seeds = step_one.results[0].poles.len();

    let mut runs: Vec<(ReggeTrajectory, std::path::PathBuf)> = Vec::new();
    for i in 0..seeds {
        let mut c = config.clone();
        c.output_dir = root.join(format!("meta_seed{i}"));
        fs::create_dir_all(&c.output_dir).map_err(|e| regge_ics::Error::io("mkdir", e))?;
        let mut session = open_session(&c, &step_one)?;
        session.seed_trajectory(0, i)?;
        while session.has_next() {
            session.follow_auto()?;
        }
        let t = session.finish()?.clone();
        persist(&session, &step_one)?;
        runs.push((t, c.output_dir));
    }
    let peak = |t: &ReggeTrajectory| t.mull_values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let biggest = runs.iter().map(|r| peak(&r.0)).fold(0.0, f64::max);
    // Seeds that merge onto the same poles describe one trajectory.
    let mut dominant: Vec<&(ReggeTrajectory, std::path::PathBuf)> = Vec::new();
    for r in runs.iter().filter(|r| peak(&r.0) >= DOMINANT_SHARE * biggest) {
        if !dominant.iter().any(|d| d.0.last().map(|p| p.position_j) == r.0.last().map(|p| p.position_j)) {
            dominant.push(r);
        }
    }
    let outputs = runs.iter().map(|r| r.1.clone()).collect();
    let Some((traj, dir)) = dominant.first().copied() else {
        return Ok(MetaRun {
            line: (false, format!("{seeds} seeds, no trajectory with a Mulholland term")),
            outputs,
        });
    };

    let top = peak(traj);
    let window: Vec<f64> = traj
        .entries
        .iter()
        .zip(&traj.mull_values)
        .filter(|(_, m)| m.abs() >= DOMINANT_SHARE * top)
        .map(|(p, _)| p.energy)
        .collect();
    let exact = column(&config.output_dir.join("ics.exact"))?;
    let smooth = column(&dir.join("ics.smooth"))?;
    let slope = |series: &BTreeMap<u64, (f64, f64)>| {
        let pts: Vec<(f64, f64)> = series.values().copied().collect();
        pts.windows(2)
            .filter(|w| window.contains(&w[0].0) && window.contains(&w[1].0))
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max)
    };
    let (ds, dx) = (slope(&smooth), slope(&exact));
    let ratio = ds / dx;
    let first = traj.entries.first().map(|p| p.position_j).unwrap_or_default();
    Ok(MetaRun {
        line: (
            dominant.len() == 1 && ratio <= SMOOTHING,
            format!(
                "{seeds} seeds, {} dominant (share {DOMINANT_SHARE}); trajectory from {:.3}{:+.3}i with peak |I_mull| {top:.3} A^2; \
                 window {:?}-{:?} meV ({} pts); max|dsmooth/dE| {ds:.3} / max|dexact/dE| {dx:.3} = {ratio:.3} (tol {SMOOTHING})",
                dominant.len(),
                first.re,
                first.im,
                window.first().copied().unwrap_or(f64::NAN),
                window.last().copied().unwrap_or(f64::NAN),
                window.len()
            ),
        ),
        outputs,
    })
}

fn residues(sets: &[&Fitted]) -> Result<(bool, String)> {
    let (mut worst, mut count): (f64, usize) = (0.0, 0);
    for f in sets {
        let c = &f.config;
        for (r, m) in f.records.iter().zip(&f.models) {
            for p in analyse_poles(m, &c.region, c.froissart_eps, r.energy)? {
                let gap = m
                    .poles
                    .iter()
                    .filter(|q| **q != p.position_j)
                    .map(|q| (q - p.position_j).norm())
                    .fold(1.0, f64::min);
                let contour = contour_residue(|j| m.eval(j), p.position_j, (gap / 4.0).min(1e-3), 64)?;
                worst = worst.max((p.residue - contour).norm() / p.residue.norm());
                count += 1;
            }
        }
    }
    Ok((
        count > 0 && worst <= RESIDUE,
        format!("{count} retained poles, worst relative deviation {worst:.2e} (tol {RESIDUE:.0e})"),
    ))
}

fn closure(bound: &Fitted) -> Result<(bool, String)> {
    let channel = bound.config.channel()?;
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    for e in CLOSURE_ENERGIES {
        let (r, m) = bound.at(e).ok_or_else(|| regge_ics::Error::Validation(format!("no data at {e} meV")))?;
        let res = closure_residual(m, r, &channel, 10.0, 2.0)?;
        worst = worst.max(res.abs());
        parts.push(format!("{e}:{res:.1e}"));
    }
    Ok((
        worst <= CLOSURE,
        format!("residuals [{}] A^2, worst {worst:.2e} (tol {CLOSURE:.0e})", parts.join(" ")),
    ))
}

fn geometric_identity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let worst = (0..100)
        .map(|_| {
            let l = Complex64::new(rng.random_range(0.0..30.0), rng.random_range(0.2..3.0));
            geometric_identity_residual(l, 40)
        })
        .fold(0.0, f64::max);
    (worst <= GEOMETRIC, format!("100 lambdas, worst residual {worst:.2e} (tol {GEOMETRIC:.0e})"))
}

/// Step II choices after the seed: mostly `auto`, one explicit index and
/// one skip.
fn dual_path_choices(steps: usize) -> Vec<&'static str> {
    (1..=steps)
        .map(|k| match k {
            3 => "0",
            7 => "skip",
            _ => "auto",
        })
        .collect()
}

/// Terminal script and the same choices over the HTTP protocol, both on
/// one directory, compared file by file.
fn dual_path(bound: &RunConfig) -> Result<(bool, String)> {
    let mut config = bound.clone();
    config.e_min = 20.0;
    config.follow_by_hand = true;
    fs::create_dir_all(&config.output_dir).map_err(|e| regge_ics::Error::io("mkdir", e))?;
    let steps = run_step_one(&config)?.results.len() - 1;
    let choices = dual_path_choices(steps);

    let script = format!("0\n{}\n", choices.join("\n"));
    run_step_two(&config, &mut ScriptedChoices::parse(&script))?;
    let terminal = common::snapshot(&config.output_dir);

    run_step_one(&config)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| regge_ics::Error::io("runtime", e))?;
    let failures: Vec<String> = rt.block_on(async {
        let server = start(&config, 0).await?;
        let addr = server.addr;
        let failures = tokio::task::spawn_blocking(move || {
            let mut requests = vec![("/api/trajectory/seed", Some(r#"{"energy_index":0,"pole_index":0}"#.to_string()))];
            for c in &choices {
                let body = match *c {
                    "auto" | "skip" => format!("\"{c}\""),
                    i => format!(r#"{{"pole_index":{i}}}"#),
                };
                requests.push(("/api/trajectory/step", Some(body)));
            }
            requests.push(("/api/trajectory/finish", None));
            requests
                .into_iter()
                .filter_map(|(path, body)| {
                    let (status, resp) = common::http(addr, "POST", path, body.as_deref());
                    (status != 200).then(|| format!("{path} -> {status} {resp}"))
                })
                .collect::<Vec<String>>()
        })
        .await
        .expect("client thread");
        server.shutdown().await?;
        Ok::<_, regge_ics::Error>(failures)
    })?;
    let served = common::snapshot(&config.output_dir);

    let differing: Vec<&str> = terminal
        .iter()
        .zip(&served)
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.as_str())
        .collect();
    let same_names = terminal.iter().map(|x| &x.0).eq(served.iter().map(|x| &x.0));
    let pass = failures.is_empty() && same_names && differing.is_empty();
    Ok((
        pass,
        format!(
            "{} files, {steps} steps; names equal {same_names}; differing {differing:?}; failed requests {failures:?}",
            terminal.len()
        ),
    ))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let root = tmp.path();
    let bound_params = ShellModelParams::bound_example();
    let meta_params = ShellModelParams::meta_example();

    let dataset = |name: &str, params: &ShellModelParams, lo: f64, hi: f64, y_max: f64| {
        let dir = root.join(name);
        fs::create_dir_all(&dir).expect("dataset directory");
        let mut c = common::dataset(&dir, params, lo, hi, 1.0, "");
        c.region.y_max = y_max;
        c
    };
    let bound_config = dataset("bound", &bound_params, 1.0, 100.0, 2.0);
    let meta_config = dataset("meta", &meta_params, 40.0, 100.0, 5.0);

    let fits = fit_dataset(bound_config.clone()).and_then(|b| Ok((b, fit_dataset(meta_config.clone())?)));
    let (bound, meta) = match fits {
        Ok(f) => f,
        Err(e) => {
            println!("FAIL setup: {e}");
            return ExitCode::FAILURE;
        }
    };

    let meta_run = meta_type_two(&meta_config, root);
    let dual = dual_path(&bound_config);

    let book = (|| -> Result<(bool, String)> {
        let mut worst: f64 = 0.0;
        let mut runs = 0;
        if let Ok(m) = &meta_run {
            for out in &m.outputs {
                worst = worst.max(bookkeeping_deviation(out, &root.join("meta_step1"))?);
                runs += 1;
            }
        }
        if dual.is_ok() {
            worst = worst.max(bookkeeping_deviation(&bound_config.output_dir, &bound_config.output_dir)?);
            runs += 1;
        }
        Ok((runs > 0 && worst <= BOOKKEEPING, format!("{runs} runs, worst relative deviation {worst:.2e} (tol {BOOKKEEPING:.0e})")))
    })();

    let lines = vec![
        line("pade exactness", Ok(exactness(&[&bound, &meta]))),
        line("rational recovery", rational_recovery()),
        line("example-1 pole", example_one_pole(&bound, &bound_params)),
        line("example-1 bound state", bound_state(&bound_params)),
        line("example-2 type-II smoothing", meta_run.map(|m| m.line)),
        line("residue oracle", residues(&[&bound, &meta])),
        line("closure identity", closure(&bound)),
        line("decomposition bookkeeping", book),
        line("geometric identity", Ok(geometric_identity())),
        line("dual-path determinism", dual),
    ];
    for l in &lines {
        println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
