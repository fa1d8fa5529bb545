//! Step I (reconstruct every energy, dump poles and cross sections) and
//! Step II (follow trajectories, subtract their Mulholland contributions).

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{parse_run_config, RunConfig};
use crate::data::{
    apply_parity_flip, parse_energy_file, read_series, read_text, write_series, write_table, write_text, SMatrixRecord,
    SeriesPoint,
};
use crate::error::{Error, Result};
use crate::ics::{default_lambda_max, integral_term, pws_cross_section, pws_from_model, subtract_trajectories, wavenumber};
use crate::pade::{inject_noise, reconstruct, PadeModel};
use crate::poles::{analyse_poles, PoleRecord};
use crate::trajectory::{export_trajectory, Choice, ReggeTrajectory, SessionState};

pub const STEP_ONE_FILE: &str = "step1.json";
pub const SESSION_FILE: &str = "session.json";

/// Reads a configuration file; relative data and output directories are
/// taken relative to the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let mut c = parse_run_config(&read_text(path)?)?;
    let base = path.parent().unwrap_or(Path::new(""));
    if c.data_dir.is_relative() {
        c.data_dir = base.join(&c.data_dir);
    }
    if c.output_dir.is_relative() {
        c.output_dir = base.join(&c.output_dir);
    }
    Ok(c)
}

/// Energy files `1`, `2`, ... in `dir`, in index order.
pub fn list_energy_files(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        if let Some(i) = name.to_str().and_then(|n| n.parse::<usize>().ok()) {
            if i > 0 && entry.path().is_file() {
                out.push((i, entry.path()));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Step I results for one energy file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyAnalysis {
    pub file_index: usize,
    pub energy: f64,
    pub jstart: usize,
    pub jfin: usize,
    pub poles: Vec<PoleRecord>,
    pub sigma_exact: f64,
    pub sigma_pade: f64,
    pub pade_error: f64,
    pub sigma_int: f64,
    /// Interpolation residual at the working precision.
    pub fit_residual: f64,
}

/// Poles of one noisy repeat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRepeat {
    pub repeat: usize,
    pub pade_error: f64,
    pub poles: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOne {
    /// Configuration of the run in its textual form.
    pub config_text: String,
    pub results: Vec<EnergyAnalysis>,
    /// `(file index, message)` for energies that failed.
    pub failures: Vec<(usize, String)>,
}

impl StepOne {
    pub fn energies(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.energy).collect()
    }

    pub fn exact_series(&self) -> Vec<SeriesPoint> {
        self.results
            .iter()
            .map(|r| SeriesPoint::new(r.energy, vec![r.sigma_exact, r.sigma_pade, r.pade_error]))
            .collect()
    }

    pub fn int_series(&self) -> Vec<SeriesPoint> {
        self.results.iter().map(|r| SeriesPoint::new(r.energy, vec![r.sigma_int])).collect()
    }

    pub fn pole_table(&self) -> Vec<SeriesPoint> {
        self.results
            .iter()
            .flat_map(|r| {
                r.poles
                    .iter()
                    .map(|p| SeriesPoint::new(r.energy, vec![p.position_j.re, p.position_j.im]))
            })
            .collect()
    }
}

/// Reads and prepares one energy file.
pub fn load_record(path: &Path, config: &RunConfig) -> Result<SMatrixRecord> {
    let rec = parse_energy_file(&read_text(path)?)?;
    Ok(if config.parity_flip { apply_parity_flip(&rec) } else { rec })
}

/// Reconstruction, poles and cross sections for one record.
pub fn analyse_record(record: &SMatrixRecord, file_index: usize, config: &RunConfig) -> Result<(EnergyAnalysis, PadeModel)> {
    let channel = config.channel()?;
    let built = reconstruct(record, config)?;
    let model = built.model;
    let poles = analyse_poles(&model, &config.region, config.froissart_eps, record.energy)?;
    let sigma_exact = pws_cross_section(record, &channel)?;
    let (sigma_pade, pade_error) = pws_from_model(&model, record, &channel)?;
    let k = wavenumber(record.energy, channel.reduced_mass)?;
    let lambda_max = config.lambda_max.unwrap_or_else(|| default_lambda_max(record));
    let sigma_int = integral_term(&model, &channel, &k, lambda_max)?;
    Ok((
        EnergyAnalysis {
            file_index,
            energy: record.energy,
            jstart: record.jstart,
            jfin: record.jfin,
            poles,
            sigma_exact,
            sigma_pade,
            pade_error,
            sigma_int,
            fit_residual: built.working_residual,
        },
        model,
    ))
}

/// Reconstructions of the record with noise of magnitude `noise_fac`,
/// `noise_repeats` times.
pub fn noise_repeats(record: &SMatrixRecord, config: &RunConfig) -> Result<Vec<NoiseRepeat>> {
    if config.noise_fac == 0.0 {
        return Ok(Vec::new());
    }
    let channel = config.channel()?;
    (0..config.noise_repeats)
        .map(|r| {
            let noisy = inject_noise(record, config.noise_fac, config.noise_seed.wrapping_add(r as u64));
            let model = reconstruct(&noisy, config)?.model;
            let (_, pade_error) = pws_from_model(&model, record, &channel)?;
            let poles = analyse_poles(&model, &config.region, config.froissart_eps, record.energy)?
                .into_iter()
                .map(|p| p.position_j)
                .collect();
            Ok(NoiseRepeat {
                repeat: r + 1,
                pade_error,
                poles,
            })
        })
        .collect()
}

type EnergyOutcome = Result<(EnergyAnalysis, Vec<NoiseRepeat>)>;

fn process_file(index: usize, path: &Path, config: &RunConfig) -> Option<EnergyOutcome> {
    let record = match load_record(path, config) {
        Ok(r) => r,
        Err(e) => return Some(Err(e)),
    };
    if !config.selects(index, record.energy) {
        return None;
    }
    Some(analyse_record(&record, index, config).and_then(|(a, _)| Ok((a, noise_repeats(&record, config)?))))
}

/// Outputs of Step II and earlier runs that Step I invalidates.
fn clear_step_two_outputs(dir: &Path) -> Result<()> {
    let Ok(entries) = fs::read_dir(dir) else {
        return Ok(());
    };
    for entry in entries.flatten() {
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let stale = name == SESSION_FILE
            || name == "ics.smooth"
            || ["ics.traj", "ics.resid", "ics.mull"]
                .iter()
                .any(|p| name == *p || name.starts_with(&format!("{p}.")));
        if stale {
            fs::remove_file(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
        }
    }
    Ok(())
}

/// Reconstructs every selected energy and writes `ics.pole`, `ics.exact`,
/// `ics.int` (and `ics.noise` when noise repeats are requested).
/// Failures at single energies are logged and skipped.
pub fn run_step_one(config: &RunConfig) -> Result<StepOne> {
    config.validate()?;
    let files = list_energy_files(&config.data_dir)?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(files.len().max(1));
    let mut outcomes: Vec<Option<EnergyOutcome>> = Vec::with_capacity(files.len());
    std::thread::scope(|scope| {
        let chunk = files.len().div_ceil(workers).max(1);
        let handles: Vec<_> = files
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|(i, p)| process_file(*i, p, config)).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            outcomes.extend(h.join().expect("Step I worker panicked"));
        }
    });

    let mut results = Vec::new();
    let mut failures = Vec::new();
    let mut noise_rows = Vec::new();
    for ((index, path), outcome) in files.iter().zip(outcomes) {
        match outcome {
            None => {}
            Some(Ok((a, noise))) => {
                info!("file {index}: E = {} meV, {} poles", a.energy, a.poles.len());
                for n in noise {
                    for p in n.poles {
                        noise_rows.push(SeriesPoint::new(a.energy, vec![n.repeat as f64, p.re, p.im, n.pade_error]));
                    }
                }
                results.push(a);
            }
            Some(Err(e)) => {
                warn!("file {index} ({}): {e}", path.display());
                failures.push((*index, e.to_string()));
            }
        }
    }
    if results.is_empty() {
        return Err(Error::Validation(format!(
            "no energy file in {} was analysed successfully ({} failed)",
            config.data_dir.display(),
            failures.len()
        )));
    }
    results.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    if let Some(w) = results.windows(2).find(|w| w[0].energy == w[1].energy) {
        return Err(Error::Validation(format!(
            "files {} and {} share the energy {} meV",
            w[0].file_index, w[1].file_index, w[0].energy
        )));
    }
    noise_rows.sort_by(|a, b| a.energy.total_cmp(&b.energy));

    let out = &config.output_dir;
    let step = StepOne {
        config_text: config.to_text(),
        results,
        failures,
    };
    clear_step_two_outputs(out)?;
    write_table(&out.join("ics.pole"), "E/meV Re(J) Im(J)", &step.pole_table())?;
    write_series(
        &out.join("ics.exact"),
        "E/meV sigma_exact/A^2 sigma_pade/A^2 pade_error",
        &step.exact_series(),
    )?;
    write_series(&out.join("ics.int"), "E/meV sigma_int/A^2", &step.int_series())?;
    if config.noise_fac > 0.0 && config.noise_repeats > 0 {
        write_table(&out.join("ics.noise"), "E/meV repeat Re(J) Im(J) pade_error", &noise_rows)?;
    }
    write_text(&out.join(STEP_ONE_FILE), &serde_json::to_string_pretty(&step)?)?;
    Ok(step)
}

pub fn load_step_one(config: &RunConfig) -> Result<StepOne> {
    let path = config.output_dir.join(STEP_ONE_FILE);
    if !path.is_file() {
        return Err(Error::MissingStepOne(path));
    }
    Ok(serde_json::from_str(&read_text(&path)?)?)
}

/// Trajectories completed in earlier Step II runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct SavedSession {
    completed: Vec<ReggeTrajectory>,
}

/// Session over the Step I energies inside `[e_min, e_max]`, carrying the
/// trajectories completed by earlier runs in the same output directory.
pub fn open_session(config: &RunConfig, step_one: &StepOne) -> Result<SessionState> {
    let chosen: Vec<&EnergyAnalysis> = step_one
        .results
        .iter()
        .filter(|r| r.energy >= config.e_min && r.energy <= config.e_max)
        .collect();
    if chosen.is_empty() {
        return Err(Error::Validation(format!(
            "no analysed energy lies in [{}, {}] meV",
            config.e_min, config.e_max
        )));
    }
    let mut session = SessionState::new(
        config.clone(),
        chosen.iter().map(|r| r.energy).collect(),
        chosen.iter().map(|r| r.poles.clone()).collect(),
    )?;
    let saved = config.output_dir.join(SESSION_FILE);
    if saved.is_file() {
        let prior: SavedSession = serde_json::from_str(&read_text(&saved)?)?;
        session.completed_trajectories = prior.completed;
    }
    Ok(session)
}

/// Writes the trajectory files, `ics.smooth` and the saved session.
/// `ics.traj`, `ics.resid` and `ics.mull` describe the latest trajectory;
/// every trajectory also gets copies suffixed with its id.
pub fn persist(session: &SessionState, step_one: &StepOne) -> Result<()> {
    let out = &session.config.output_dir;
    let all: Vec<&ReggeTrajectory> = session.all_trajectories().collect();
    for (i, t) in all.iter().enumerate() {
        let (traj, resid, mull) = export_trajectory(t);
        let mut names = vec![format!(".{}", t.id)];
        if i + 1 == all.len() {
            names.push(String::new());
        }
        for suffix in names {
            write_series(&out.join(format!("ics.traj{suffix}")), "E/meV Re(J) Im(J)", &traj)?;
            write_series(&out.join(format!("ics.resid{suffix}")), "E/meV Re(Res) Im(Res)", &resid)?;
            write_series(&out.join(format!("ics.mull{suffix}")), "E/meV I_mull/A^2", &mull)?;
        }
    }
    write_series(&out.join("ics.smooth"), "E/meV sigma_smooth/A^2", &smooth_series(session, step_one)?)?;
    let saved = SavedSession {
        completed: session.completed_trajectories.clone(),
    };
    write_text(&out.join(SESSION_FILE), &serde_json::to_string_pretty(&saved)?)
}

/// Exact cross section minus the Mulholland series of every trajectory.
pub fn smooth_series(session: &SessionState, step_one: &StepOne) -> Result<Vec<SeriesPoint>> {
    let exact: Vec<SeriesPoint> = step_one
        .results
        .iter()
        .map(|r| SeriesPoint::new(r.energy, vec![r.sigma_exact]))
        .collect();
    let mull: Vec<Vec<SeriesPoint>> = session.all_trajectories().map(|t| t.mull_series()).collect();
    subtract_trajectories(&exact, &mull)
}

/// Source of human decisions in Step II.
pub trait ChoiceSource {
    /// Index of the pole that starts the trajectory.
    fn seed(&mut self, energy: f64, poles: &[PoleRecord]) -> Result<usize>;
    /// Selection at the next energy when following by hand.
    fn choose(&mut self, energy: f64, poles: &[PoleRecord]) -> Result<Choice>;
}

/// Choices read from a script: one pole index, `skip` or `auto` per line,
/// the first line seeding the trajectory.
#[derive(Clone, Debug)]
pub struct ScriptedChoices {
    lines: std::vec::IntoIter<String>,
}

impl ScriptedChoices {
    pub fn parse(text: &str) -> Self {
        let lines: Vec<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        ScriptedChoices { lines: lines.into_iter() }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::parse(&read_text(path)?))
    }

    fn next_choice(&mut self, energy: f64) -> Result<Choice> {
        self.lines
            .next()
            .ok_or_else(|| Error::Usage(format!("the choice script ended before E = {energy} meV")))?
            .parse()
    }
}

impl ChoiceSource for ScriptedChoices {
    fn seed(&mut self, energy: f64, _poles: &[PoleRecord]) -> Result<usize> {
        match self.next_choice(energy)? {
            Choice::Index(i) => Ok(i),
            other => Err(Error::Usage(format!("the first choice must be a pole index, found {other:?}"))),
        }
    }

    fn choose(&mut self, energy: f64, _poles: &[PoleRecord]) -> Result<Choice> {
        self.next_choice(energy)
    }
}

/// Numbered pole menu on a terminal.
pub struct TerminalChoices<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> TerminalChoices<R, W> {
    pub fn new(input: R, output: W) -> Self {
        TerminalChoices { input, output }
    }

    fn ask(&mut self, energy: f64, poles: &[PoleRecord], prompt: &str) -> Result<String> {
        let io = |e| Error::io("terminal", e);
        writeln!(self.output, "E = {energy} meV").map_err(io)?;
        for (i, p) in poles.iter().enumerate() {
            writeln!(
                self.output,
                "  [{i}] J = {:.6} {:+.6}i   Res = {:.4e} {:+.4e}i",
                p.position_j.re, p.position_j.im, p.residue.re, p.residue.im
            )
            .map_err(io)?;
        }
        write!(self.output, "{prompt}").map_err(io)?;
        self.output.flush().map_err(io)?;
        let mut line = String::new();
        if self.input.read_line(&mut line).map_err(io)? == 0 {
            return Err(Error::Usage("input ended during the session".into()));
        }
        Ok(line)
    }
}

impl<R: BufRead, W: Write> ChoiceSource for TerminalChoices<R, W> {
    fn seed(&mut self, energy: f64, poles: &[PoleRecord]) -> Result<usize> {
        loop {
            match self.ask(energy, poles, "seed pole index: ")?.parse::<Choice>() {
                Ok(Choice::Index(i)) if i < poles.len() => return Ok(i),
                _ => writeln!(self.output, "enter one of the listed indices").map_err(|e| Error::io("terminal", e))?,
            }
        }
    }

    fn choose(&mut self, energy: f64, poles: &[PoleRecord]) -> Result<Choice> {
        loop {
            match self.ask(energy, poles, "pole index, `skip` or `auto`: ")?.parse::<Choice>() {
                Ok(Choice::Index(i)) if i >= poles.len() => {}
                Ok(c) => return Ok(c),
                Err(_) => {}
            }
            writeln!(self.output, "enter a listed index, `skip` or `auto`").map_err(|e| Error::io("terminal", e))?;
        }
    }
}

/// Seeds a trajectory at the first energy of the range, follows it to the
/// last one (automatically or by hand), then writes the outputs.
pub fn run_step_two(config: &RunConfig, source: &mut dyn ChoiceSource) -> Result<SessionState> {
    config.validate()?;
    let step_one = load_step_one(config)?;
    let mut session = open_session(config, &step_one)?;
    let seed = source.seed(session.energies[0], &session.poles_by_energy[0])?;
    session.seed_trajectory(0, seed)?;
    persist(&session, &step_one)?;
    while session.has_next() {
        let next = session.current_energy_index + 1;
        let outcome = if config.follow_by_hand {
            let choice = source.choose(session.energies[next], &session.poles_by_energy[next])?;
            session.follow_manual(choice)?
        } else {
            session.follow_auto()?
        };
        info!("{outcome:?}");
        persist(&session, &step_one)?;
    }
    session.finish()?;
    persist(&session, &step_one)?;
    Ok(session)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleSummary {
    pub re_j: f64,
    pub im_j: f64,
    pub re_res: f64,
    pub im_res: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub id: String,
    pub active: bool,
    pub energies: Vec<f64>,
    pub re_j: Vec<f64>,
    pub im_j: Vec<f64>,
    pub mull: Vec<f64>,
    pub gaps: Vec<f64>,
}

/// Snapshot of a session for the browser console.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionExport {
    pub energies: Vec<f64>,
    pub poles_by_energy: Vec<Vec<PoleSummary>>,
    pub series: BTreeMap<String, Vec<SeriesPoint>>,
    pub trajectories: Vec<TrajectorySummary>,
    pub current_energy_index: usize,
    pub following: bool,
    pub config: String,
}

/// Output series currently on disk plus the smooth background of the
/// session state.
pub fn decomposition_series(session: &SessionState, step_one: &StepOne) -> Result<BTreeMap<String, Vec<SeriesPoint>>> {
    let mut series = BTreeMap::new();
    series.insert("exact".to_string(), step_one.exact_series());
    series.insert("int".to_string(), step_one.int_series());
    for t in session.all_trajectories() {
        series.insert(format!("mull.{}", t.id), t.mull_series());
    }
    series.insert("smooth".to_string(), smooth_series(session, step_one)?);
    Ok(series)
}

pub fn session_export(session: &SessionState, step_one: &StepOne) -> Result<SessionExport> {
    let active_id = session.active_trajectory.as_ref().map(|t| t.id.clone());
    Ok(SessionExport {
        energies: session.energies.clone(),
        poles_by_energy: session
            .poles_by_energy
            .iter()
            .map(|ps| {
                ps.iter()
                    .map(|p| PoleSummary {
                        re_j: p.position_j.re,
                        im_j: p.position_j.im,
                        re_res: p.residue.re,
                        im_res: p.residue.im,
                    })
                    .collect()
            })
            .collect(),
        series: decomposition_series(session, step_one)?,
        trajectories: session
            .all_trajectories()
            .map(|t| TrajectorySummary {
                id: t.id.clone(),
                active: Some(&t.id) == active_id.as_ref(),
                energies: t.entries.iter().map(|p| p.energy).collect(),
                re_j: t.entries.iter().map(|p| p.position_j.re).collect(),
                im_j: t.entries.iter().map(|p| p.position_j.im).collect(),
                mull: t.mull_values.clone(),
                gaps: t.gaps.clone(),
            })
            .collect(),
        current_energy_index: session.current_energy_index,
        following: session.active_trajectory.is_some(),
        config: session.config.to_text(),
    })
}

/// `S` along the real `J` axis of the fit window at `plot_points` points,
/// as `(J, Re S, Im S)` rows.
pub fn sample_model(model: &PadeModel, j_lo: f64, j_hi: f64, points: usize) -> Vec<SeriesPoint> {
    let n = points.max(2);
    (0..n)
        .filter_map(|i| {
            let j = j_lo + (j_hi - j_lo) * i as f64 / (n - 1) as f64;
            model.eval_real(j).ok().map(|s| SeriesPoint::new(j, vec![s.re, s.im]))
        })
        .collect()
}

/// Reads back one of the written series files.
pub fn read_output(config: &RunConfig, name: &str) -> Result<Vec<SeriesPoint>> {
    read_series(&config.output_dir.join(name))
}
