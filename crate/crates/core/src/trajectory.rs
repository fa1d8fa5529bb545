//! Following one Regge pole across the energy grid.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::SeriesPoint;
use crate::error::{Error, Result};
use crate::ics::{modified_mulholland_term, mulholland_term, wavenumber};
use crate::poles::PoleRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReggeTrajectory {
    pub id: String,
    pub entries: Vec<PoleRecord>,
    /// Å², parallel to `entries`.
    pub mull_values: Vec<f64>,
    /// Energies passed without a pole.
    pub gaps: Vec<f64>,
}

impl ReggeTrajectory {
    pub fn new(id: impl Into<String>) -> Self {
        ReggeTrajectory {
            id: id.into(),
            entries: Vec::new(),
            mull_values: Vec::new(),
            gaps: Vec::new(),
        }
    }

    pub fn push(&mut self, pole: PoleRecord, mull: f64) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if !(pole.energy > last.energy) {
                return Err(Error::Validation(format!(
                    "trajectory energies must increase: {} after {}",
                    pole.energy, last.energy
                )));
            }
        }
        self.entries.push(pole);
        self.mull_values.push(mull);
        Ok(())
    }

    pub fn last(&self) -> Option<&PoleRecord> {
        self.entries.last()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mull_series(&self) -> Vec<SeriesPoint> {
        self.entries
            .iter()
            .zip(&self.mull_values)
            .map(|(p, m)| SeriesPoint::new(p.energy, vec![*m]))
            .collect()
    }
}

/// Pole positions `(E, Re J, Im J)`, residues `(E, Re, Im)` and Mulholland
/// values `(E, I)`; gap energies are absent.
pub fn export_trajectory(traj: &ReggeTrajectory) -> (Vec<SeriesPoint>, Vec<SeriesPoint>, Vec<SeriesPoint>) {
    let positions = traj
        .entries
        .iter()
        .map(|p| SeriesPoint::new(p.energy, vec![p.position_j.re, p.position_j.im]))
        .collect();
    let residues = traj
        .entries
        .iter()
        .map(|p| SeriesPoint::new(p.energy, vec![p.residue.re, p.residue.im]))
        .collect();
    (positions, residues, traj.mull_series())
}

/// One selection at the next energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Index(usize),
    Auto,
    Skip,
}

impl std::str::FromStr for Choice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" | "a" => Ok(Choice::Auto),
            "skip" | "s" => Ok(Choice::Skip),
            t => t
                .parse()
                .map(Choice::Index)
                .map_err(|_| Error::Usage(format!("expected a pole index, `auto` or `skip`, found `{t}`"))),
        }
    }
}

/// What a step did.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StepOutcome {
    Appended { energy: f64, pole_index: usize },
    Gap { energy: f64 },
}

/// Mulholland contribution of a pole under the configured formula.
pub fn mull_value(config: &RunConfig, pole: &PoleRecord) -> Result<f64> {
    let k = wavenumber(pole.energy, config.reduced_mass)?;
    if config.modified_mulholland {
        modified_mulholland_term(pole, &k, config.elastic_channel)
    } else {
        mulholland_term(pole, &k, config.elastic_channel)
    }
}

/// Pole at the next energy continuing from `prev`: nearest real part, then
/// nearest imaginary part, then list order.
pub fn nearest_pole(prev: &PoleRecord, candidates: &[PoleRecord]) -> Option<usize> {
    let key = |p: &PoleRecord| {
        (
            (p.position_j.re - prev.position_j.re).abs(),
            (p.position_j.im - prev.position_j.im).abs(),
        )
    };
    candidates
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(i.cmp(j))
        })
        .map(|(i, _)| i)
}

/// State of a trajectory-following session over one energy grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub config: RunConfig,
    pub energies: Vec<f64>,
    /// Parallel to `energies`.
    pub poles_by_energy: Vec<Vec<PoleRecord>>,
    pub current_energy_index: usize,
    pub active_trajectory: Option<ReggeTrajectory>,
    pub completed_trajectories: Vec<ReggeTrajectory>,
}

impl SessionState {
    pub fn new(config: RunConfig, energies: Vec<f64>, poles_by_energy: Vec<Vec<PoleRecord>>) -> Result<Self> {
        if energies.len() != poles_by_energy.len() {
            return Err(Error::Structure(format!(
                "{} energies but {} pole lists",
                energies.len(),
                poles_by_energy.len()
            )));
        }
        if energies.is_empty() {
            return Err(Error::Validation("the session has no energies".into()));
        }
        if energies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("session energies must be strictly increasing".into()));
        }
        Ok(SessionState {
            config,
            energies,
            poles_by_energy,
            current_energy_index: 0,
            active_trajectory: None,
            completed_trajectories: Vec::new(),
        })
    }

    fn next_id(&self) -> String {
        (self.completed_trajectories.len() + 1).to_string()
    }

    fn active(&self) -> Result<&ReggeTrajectory> {
        self.active_trajectory
            .as_ref()
            .ok_or_else(|| Error::Usage("no trajectory is being followed; seed one first".into()))
    }

    /// Starts a trajectory with pole `pole_index` at energy `energy_index`.
    pub fn seed_trajectory(&mut self, energy_index: usize, pole_index: usize) -> Result<()> {
        if self.active_trajectory.is_some() {
            return Err(Error::Usage("a trajectory is already being followed; finish it first".into()));
        }
        let energy = *self
            .energies
            .get(energy_index)
            .ok_or_else(|| Error::Usage(format!("energy index {energy_index} is out of range")))?;
        let poles = &self.poles_by_energy[energy_index];
        if poles.is_empty() {
            return Err(Error::NoPoles {
                energy,
                hint: "widen the CAM region or lower the Froissart threshold".into(),
            });
        }
        let pole = *poles
            .get(pole_index)
            .ok_or_else(|| Error::Usage(format!("pole index {pole_index} is out of range ({} poles)", poles.len())))?;
        let mull = mull_value(&self.config, &pole)?;
        let mut traj = ReggeTrajectory::new(self.next_id());
        traj.push(pole, mull)?;
        self.active_trajectory = Some(traj);
        self.current_energy_index = energy_index;
        Ok(())
    }

    /// Whether the active trajectory can advance.
    pub fn has_next(&self) -> bool {
        self.active_trajectory.is_some() && self.current_energy_index + 1 < self.energies.len()
    }

    fn next_index(&self) -> Result<usize> {
        self.active()?;
        let next = self.current_energy_index + 1;
        if next >= self.energies.len() {
            return Err(Error::Usage("the trajectory has reached the last energy".into()));
        }
        Ok(next)
    }

    /// Appends the pole at the next energy nearest in real part to the last
    /// accepted one; with no poles there the energy is recorded as a gap.
    pub fn follow_auto(&mut self) -> Result<StepOutcome> {
        let next = self.next_index()?;
        let prev = *self.active()?.last().expect("active trajectory is seeded");
        match nearest_pole(&prev, &self.poles_by_energy[next]) {
            Some(i) => self.append(next, i),
            None => Ok(self.gap(next)),
        }
    }

    /// Applies a human selection at the next energy.
    pub fn follow_manual(&mut self, choice: Choice) -> Result<StepOutcome> {
        let next = self.next_index()?;
        match choice {
            Choice::Auto => self.follow_auto(),
            Choice::Skip => Ok(self.gap(next)),
            Choice::Index(i) => {
                let n = self.poles_by_energy[next].len();
                if i >= n {
                    return Err(Error::Usage(format!("pole index {i} is out of range ({n} poles)")));
                }
                self.append(next, i)
            }
        }
    }

    fn append(&mut self, next: usize, pole_index: usize) -> Result<StepOutcome> {
        let pole = self.poles_by_energy[next][pole_index];
        let mull = mull_value(&self.config, &pole)?;
        let traj = self.active_trajectory.as_mut().expect("checked by next_index");
        traj.push(pole, mull)?;
        self.current_energy_index = next;
        Ok(StepOutcome::Appended {
            energy: pole.energy,
            pole_index,
        })
    }

    fn gap(&mut self, next: usize) -> StepOutcome {
        let energy = self.energies[next];
        if let Some(t) = self.active_trajectory.as_mut() {
            t.gaps.push(energy);
        }
        self.current_energy_index = next;
        StepOutcome::Gap { energy }
    }

    /// Moves the active trajectory to the completed list.
    pub fn finish(&mut self) -> Result<&ReggeTrajectory> {
        let t = self
            .active_trajectory
            .take()
            .ok_or_else(|| Error::Usage("no trajectory is being followed".into()))?;
        self.completed_trajectories.push(t);
        Ok(self.completed_trajectories.last().expect("just pushed"))
    }

    /// Completed trajectories followed by the active one, if any.
    pub fn all_trajectories(&self) -> impl Iterator<Item = &ReggeTrajectory> {
        self.completed_trajectories.iter().chain(self.active_trajectory.iter())
    }
}
