//! Per-energy S-matrix files and the whitespace-column series files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyKind {
    Total,
    Collision,
}

/// Which transition a record describes and how to turn it into a cross
/// section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub elastic: bool,
    pub omega_in: i32,
    pub omega_out: i32,
    /// Daltons.
    pub reduced_mass: f64,
    pub energy_kind: EnergyKind,
}

impl ChannelSpec {
    pub fn new(elastic: bool, omega_in: i32, omega_out: i32, reduced_mass: f64) -> Result<Self> {
        let spec = ChannelSpec {
            elastic,
            omega_in,
            omega_out,
            reduced_mass,
            energy_kind: EnergyKind::Collision,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reduced_mass > 0.0) || !self.reduced_mass.is_finite() {
            return Err(Error::Validation(format!(
                "reduced mass must be positive, got {}",
                self.reduced_mass
            )));
        }
        if self.elastic && self.omega_in != self.omega_out {
            return Err(Error::Validation(
                "elastic transitions keep the helicity (omega_out = omega_in)".into(),
            ));
        }
        Ok(())
    }

    /// Lowest partial wave entering the sum.
    pub fn j_min(&self) -> usize {
        if self.elastic {
            self.omega_in.unsigned_abs() as usize
        } else {
            self.omega_in.unsigned_abs().max(self.omega_out.unsigned_abs()) as usize
        }
    }
}

/// One energy's S(E, J) table for J = 0..nread-1 with its reconstruction
/// header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SMatrixRecord {
    /// meV.
    pub energy: f64,
    pub s_values: Vec<Complex64>,
    pub nread: usize,
    pub niter: usize,
    pub sht: f64,
    pub jstart: usize,
    pub jfin: usize,
    /// Carried through, never interpreted.
    pub inv: i64,
    pub dxl: f64,
}

impl SMatrixRecord {
    pub fn validate(&self) -> Result<()> {
        if self.nread < 4 {
            return Err(Error::Validation(format!("nread must be at least 4, got {}", self.nread)));
        }
        if self.s_values.len() != self.nread {
            return Err(Error::Structure(format!(
                "nread = {} but {} S-matrix values present",
                self.nread,
                self.s_values.len()
            )));
        }
        if self.jstart > self.jfin || self.jfin >= self.nread {
            return Err(Error::Validation(format!(
                "need 0 <= jstart <= jfin <= nread-1, got jstart={} jfin={} nread={}",
                self.jstart, self.jfin, self.nread
            )));
        }
        if !(self.energy > 0.0) || !self.energy.is_finite() {
            return Err(Error::Validation(format!("energy must be positive, got {}", self.energy)));
        }
        if let Some(j) = self.s_values.iter().position(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::Validation(format!("S(J={j}) is not finite")));
        }
        if !self.sht.is_finite() || !self.dxl.is_finite() {
            return Err(Error::Validation("sht and dxl must be finite".into()));
        }
        Ok(())
    }

    /// `(J, S)` pairs of the jstart..=jfin window used for reconstruction.
    pub fn fit_points(&self) -> Vec<(f64, Complex64)> {
        (self.jstart..=self.jfin)
            .map(|j| (j as f64, self.s_values[j]))
            .collect()
    }

    /// Keeps the first `nread` values and clamps the fit window to them.
    pub fn truncated(&self, nread: usize) -> Result<Self> {
        if nread > self.s_values.len() {
            return Err(Error::Validation(format!(
                "cannot use {nread} partial waves, only {} stored",
                self.s_values.len()
            )));
        }
        let mut r = self.clone();
        r.nread = nread;
        r.s_values.truncate(nread);
        r.jfin = r.jfin.min(nread.saturating_sub(1));
        r.jstart = r.jstart.min(r.jfin);
        r.validate()?;
        Ok(r)
    }
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| line.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Tokens { items, pos: 0 }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let t = self.items.get(self.pos).copied().ok_or_else(|| {
            Error::Structure(format!("unexpected end of file while reading {what}"))
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn real(&mut self, what: &str) -> Result<f64> {
        let (line, tok) = self.next(what)?;
        tok.parse::<f64>().map_err(|_| Error::Parse {
            line,
            message: format!("expected a number for {what}, found `{tok}`"),
        })
    }

    fn int(&mut self, what: &str) -> Result<i64> {
        let (line, tok) = self.next(what)?;
        tok.parse::<i64>().map_err(|_| Error::Parse {
            line,
            message: format!("expected an integer for {what}, found `{tok}`"),
        })
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let line = self.items.get(self.pos).map(|t| t.0).unwrap_or(0);
        let v = self.int(what)?;
        usize::try_from(v).map_err(|_| Error::Parse {
            line,
            message: format!("{what} must be non-negative, found {v}"),
        })
    }
}

/// Parses a per-energy file: header `nread niter sht jstart jfin inv dxl`,
/// `nread` lines of `Re S  Im S`, and the energy in meV.
pub fn parse_energy_file(text: &str) -> Result<SMatrixRecord> {
    let mut tok = Tokens::new(text);
    let nread = tok.count("nread")?;
    let niter = tok.count("niter")?;
    let sht = tok.real("sht")?;
    let jstart = tok.count("jstart")?;
    let jfin = tok.count("jfin")?;
    let inv = tok.int("inv")?;
    let dxl = tok.real("dxl")?;

    // Count what is left before consuming so a short table is reported as a
    // structural mismatch rather than a missing energy.
    let remaining = tok.items.len() - tok.pos;
    if remaining != 2 * nread + 1 {
        let pairs = remaining.saturating_sub(1) as f64 / 2.0;
        return Err(Error::Structure(format!(
            "nread = {nread} requires {} values after the header, found {remaining} (about {pairs} pairs plus energy)",
            2 * nread + 1
        )));
    }
    let mut s_values = Vec::with_capacity(nread);
    for j in 0..nread {
        let re = tok.real(&format!("Re S(J={j})"))?;
        let im = tok.real(&format!("Im S(J={j})"))?;
        s_values.push(Complex64::new(re, im));
    }
    let energy = tok.real("energy")?;

    let record = SMatrixRecord {
        energy,
        s_values,
        nread,
        niter,
        sht,
        jstart,
        jfin,
        inv,
        dxl,
    };
    record.validate()?;
    Ok(record)
}

/// Inverse of [`parse_energy_file`]; numbers use the shortest round-trip
/// decimal form.
pub fn format_energy_file(record: &SMatrixRecord) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {:?} {} {} {} {:?}",
        record.nread, record.niter, record.sht, record.jstart, record.jfin, record.inv, record.dxl
    );
    for s in &record.s_values {
        let _ = writeln!(out, "{:?} {:?}", s.re, s.im);
    }
    let _ = writeln!(out, "{:?}", record.energy);
    out
}

/// Multiplies S(J) by (-1)^J.
pub fn apply_parity_flip(record: &SMatrixRecord) -> SMatrixRecord {
    let mut r = record.clone();
    for (j, s) in r.s_values.iter_mut().enumerate() {
        if j % 2 == 1 {
            *s = -*s;
        }
    }
    r
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    /// meV.
    pub energy: f64,
    pub values: Vec<f64>,
}

impl SeriesPoint {
    pub fn new(energy: f64, values: Vec<f64>) -> Self {
        SeriesPoint { energy, values }
    }
}

/// Renders a series: each header line prefixed with `# `, then one row per
/// point.
pub fn format_series(header: &str, points: &[SeriesPoint]) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    for p in points {
        let _ = write!(out, "{:?}", p.energy);
        for v in &p.values {
            let _ = write!(out, " {v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_series(text: &str) -> Result<Vec<SeriesPoint>> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut nums = line.split_whitespace().map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("expected a number, found `{t}`"),
            })
        });
        let energy = nums.next().expect("non-empty line has a token")?;
        let values = nums.collect::<Result<Vec<_>>>()?;
        points.push(SeriesPoint { energy, values });
    }
    Ok(points)
}

fn check_order(points: &[SeriesPoint], strict: bool) -> Result<()> {
    for w in points.windows(2) {
        let ok = if strict {
            w[1].energy > w[0].energy
        } else {
            w[1].energy >= w[0].energy
        };
        if !ok {
            return Err(Error::Validation(format!(
                "series energies out of order at {} -> {}",
                w[0].energy, w[1].energy
            )));
        }
    }
    Ok(())
}

/// Writes a series whose energies are strictly increasing.
pub fn write_series(path: &Path, header: &str, points: &[SeriesPoint]) -> Result<()> {
    check_order(points, true)?;
    write_text(path, &format_series(header, points))
}

/// Writes a table with possibly repeated energies (several rows per
/// energy, as in the pole dump).
pub fn write_table(path: &Path, header: &str, points: &[SeriesPoint]) -> Result<()> {
    check_order(points, false)?;
    write_text(path, &format_series(header, points))
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesPoint>> {
    parse_series(&read_text(path)?)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
