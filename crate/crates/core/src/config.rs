//! Run configuration: `key: value` lines, `#` starts a comment.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::{ChannelSpec, EnergyKind};
use crate::error::{Error, Result};
use crate::mp::DEFAULT_EXTENDED_DIGITS;
use crate::poles::CamRegion;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub first_run: bool,
    pub follow_by_hand: bool,
    pub elastic_channel: bool,
    pub modified_mulholland: bool,
    /// Inclusive range of energy-file indices (files are named 1, 2, ...).
    pub file_range: (usize, usize),
    pub e_min: f64,
    pub e_max: f64,
    pub reduced_mass: f64,
    pub omega_in: i32,
    pub omega_out: i32,
    pub energy_kind: EnergyKind,
    pub froissart_eps: f64,
    pub region: CamRegion,
    pub parity_flip: bool,
    pub strip_prephase: bool,
    pub use_extended_precision: bool,
    pub precision_digits: u32,
    pub noise_fac: f64,
    pub noise_repeats: usize,
    pub noise_seed: u64,
    pub plot_points: usize,
    pub override_nread: Option<usize>,
    pub override_niter: Option<usize>,
    pub override_dxl: Option<f64>,
    /// Upper λ limit of the real-axis integral; defaults to nread - 1/2.
    pub lambda_max: Option<f64>,
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            first_run: true,
            follow_by_hand: false,
            elastic_channel: true,
            modified_mulholland: false,
            file_range: (1, usize::MAX),
            e_min: 0.0,
            e_max: f64::INFINITY,
            reduced_mass: 1.0,
            omega_in: 0,
            omega_out: 0,
            energy_kind: EnergyKind::Collision,
            froissart_eps: 1e-6,
            region: CamRegion {
                x_min: 0.0,
                x_max: 30.0,
                y_min: 0.0,
                y_max: 5.0,
            },
            parity_flip: false,
            strip_prephase: false,
            use_extended_precision: false,
            precision_digits: DEFAULT_EXTENDED_DIGITS,
            noise_fac: 0.0,
            noise_repeats: 0,
            noise_seed: 0,
            plot_points: 200,
            override_nread: None,
            override_niter: None,
            override_dxl: None,
            lambda_max: None,
            data_dir: PathBuf::from("input"),
            output_dir: PathBuf::from("output"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.e_min < self.e_max) {
            return bad(format!("e_min ({}) must be below e_max ({})", self.e_min, self.e_max));
        }
        if self.file_range.0 > self.file_range.1 {
            return bad(format!(
                "file_first ({}) exceeds file_last ({})",
                self.file_range.0, self.file_range.1
            ));
        }
        self.region.validate()?;
        if !(self.froissart_eps >= 0.0) {
            return bad(format!("froissart_eps must be >= 0, got {}", self.froissart_eps));
        }
        if !(self.noise_fac >= 0.0) {
            return bad(format!("noise_fac must be >= 0, got {}", self.noise_fac));
        }
        if self.modified_mulholland && !self.elastic_channel {
            return bad("modified_mulholland is only available for single-channel elastic scattering".into());
        }
        if let Some(dxl) = self.override_dxl {
            if !(dxl > 0.0) {
                return bad(format!("dxl override must be positive, got {dxl}"));
            }
        }
        if self.override_niter == Some(0) {
            return bad("niter override must be at least 1".into());
        }
        if matches!(self.override_nread, Some(n) if n < 4) {
            return bad("nread override must be at least 4".into());
        }
        if self.precision_digits < 16 {
            return bad(format!("precision_digits must be at least 16, got {}", self.precision_digits));
        }
        self.channel().map(|_| ())
    }

    pub fn channel(&self) -> Result<ChannelSpec> {
        let mut c = ChannelSpec::new(self.elastic_channel, self.omega_in, self.omega_out, self.reduced_mass)?;
        c.energy_kind = self.energy_kind;
        Ok(c)
    }

    /// Whether an energy file with this index and energy takes part in the run.
    pub fn selects(&self, file_index: usize, energy: f64) -> bool {
        (self.file_range.0..=self.file_range.1).contains(&file_index)
            && energy >= self.e_min
            && energy <= self.e_max
    }

    /// Re-renders the configuration in its textual form.
    pub fn to_text(&self) -> String {
        let yn = |b: bool| if b { "yes" } else { "no" };
        let mut lines = vec![
            format!("first_run: {}", yn(self.first_run)),
            format!("follow_by_hand: {}", yn(self.follow_by_hand)),
            format!("elastic_channel: {}", yn(self.elastic_channel)),
            format!("modified_mulholland: {}", yn(self.modified_mulholland)),
            format!("file_first: {}", self.file_range.0),
        ];
        if self.file_range.1 != usize::MAX {
            lines.push(format!("file_last: {}", self.file_range.1));
        }
        lines.push(format!("e_min: {:?}", self.e_min));
        if self.e_max.is_finite() {
            lines.push(format!("e_max: {:?}", self.e_max));
        }
        lines.extend([
            format!("reduced_mass: {:?}", self.reduced_mass),
            format!("omega_in: {}", self.omega_in),
            format!("omega_out: {}", self.omega_out),
            format!(
                "energy_kind: {}",
                match self.energy_kind {
                    EnergyKind::Total => "total",
                    EnergyKind::Collision => "collision",
                }
            ),
            format!("froissart_eps: {:?}", self.froissart_eps),
            format!("x_min: {:?}", self.region.x_min),
            format!("x_max: {:?}", self.region.x_max),
            format!("y_min: {:?}", self.region.y_min),
            format!("y_max: {:?}", self.region.y_max),
            format!("parity_flip: {}", yn(self.parity_flip)),
            format!("strip_prephase: {}", yn(self.strip_prephase)),
            format!("extended_precision: {}", yn(self.use_extended_precision)),
            format!("precision_digits: {}", self.precision_digits),
            format!("noise_fac: {:?}", self.noise_fac),
            format!("noise_repeats: {}", self.noise_repeats),
            format!("noise_seed: {}", self.noise_seed),
            format!("plot_points: {}", self.plot_points),
        ]);
        if let Some(v) = self.override_nread {
            lines.push(format!("nread_override: {v}"));
        }
        if let Some(v) = self.override_niter {
            lines.push(format!("niter_override: {v}"));
        }
        if let Some(v) = self.override_dxl {
            lines.push(format!("dxl_override: {v:?}"));
        }
        if let Some(v) = self.lambda_max {
            lines.push(format!("lambda_max: {v:?}"));
        }
        lines.push(format!("data_dir: {}", self.data_dir.display()));
        lines.push(format!("output_dir: {}", self.output_dir.display()));
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "yes" | "true" | "1" | "y" => Ok(true),
        "no" | "false" | "0" | "n" => Ok(false),
        _ => Err(Error::Parse {
            line,
            message: format!("`{key}` expects yes/no, found `{v}`"),
        }),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{key}` expects a number, found `{v}`"),
    })
}

/// An empty value leaves an optional override unset.
fn parse_opt<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Option<T>> {
    if v.is_empty() || v.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse_num(line, key, v).map(Some)
    }
}

pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| Error::Parse {
            line: n,
            message: format!("expected `key: value`, found `{line}`"),
        })?;
        let key = key.trim();
        let v = value.trim();
        match key {
            "first_run" => c.first_run = parse_bool(n, key, v)?,
            "follow_by_hand" => c.follow_by_hand = parse_bool(n, key, v)?,
            "elastic_channel" => c.elastic_channel = parse_bool(n, key, v)?,
            "modified_mulholland" => c.modified_mulholland = parse_bool(n, key, v)?,
            "file_first" => c.file_range.0 = parse_num(n, key, v)?,
            "file_last" => c.file_range.1 = parse_num(n, key, v)?,
            "e_min" => c.e_min = parse_num(n, key, v)?,
            "e_max" => c.e_max = parse_num(n, key, v)?,
            "reduced_mass" => c.reduced_mass = parse_num(n, key, v)?,
            "omega_in" => c.omega_in = parse_num(n, key, v)?,
            "omega_out" => c.omega_out = parse_num(n, key, v)?,
            "energy_kind" => {
                c.energy_kind = match v.to_ascii_lowercase().as_str() {
                    "total" => EnergyKind::Total,
                    "collision" => EnergyKind::Collision,
                    _ => {
                        return Err(Error::Parse {
                            line: n,
                            message: format!("`energy_kind` expects total or collision, found `{v}`"),
                        })
                    }
                }
            }
            "froissart_eps" => c.froissart_eps = parse_num(n, key, v)?,
            "x_min" => c.region.x_min = parse_num(n, key, v)?,
            "x_max" => c.region.x_max = parse_num(n, key, v)?,
            "y_min" => c.region.y_min = parse_num(n, key, v)?,
            "y_max" => c.region.y_max = parse_num(n, key, v)?,
            "parity_flip" => c.parity_flip = parse_bool(n, key, v)?,
            "strip_prephase" => c.strip_prephase = parse_bool(n, key, v)?,
            "extended_precision" => c.use_extended_precision = parse_bool(n, key, v)?,
            "precision_digits" => c.precision_digits = parse_num(n, key, v)?,
            "noise_fac" => c.noise_fac = parse_num(n, key, v)?,
            "noise_repeats" => c.noise_repeats = parse_num(n, key, v)?,
            "noise_seed" => c.noise_seed = parse_num(n, key, v)?,
            "plot_points" => c.plot_points = parse_num(n, key, v)?,
            "nread_override" => c.override_nread = parse_opt(n, key, v)?,
            "niter_override" => c.override_niter = parse_opt(n, key, v)?,
            "dxl_override" => c.override_dxl = parse_opt(n, key, v)?,
            "lambda_max" => c.lambda_max = parse_opt(n, key, v)?,
            "data_dir" => c.data_dir = PathBuf::from(v),
            "output_dir" => c.output_dir = PathBuf::from(v),
            other => return Err(Error::UnknownKey(other.to_string())),
        }
    }
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BOUND: &str = "
# Example 1
first_run: yes
follow_by_hand: no
elastic_channel: yes
modified_mulholland: no
e_min: 1
e_max: 100
reduced_mass: 1.0
froissart_eps: 1e-6
x_min: 0
x_max: 20
y_min: 0
y_max: 2
";

    #[test]
    fn bound_like_config() {
        let c = parse_run_config(BOUND).unwrap();
        assert!(c.first_run);
        assert!(c.elastic_channel);
        assert_eq!(c.region.x_max, 20.0);
        assert_eq!(c.override_nread, None);
        assert_eq!(c.override_dxl, None);
    }

    #[test]
    fn modified_requires_elastic() {
        let text = "modified_mulholland: yes\nelastic_channel: no\n";
        assert!(matches!(parse_run_config(text), Err(Error::Validation(_))));
    }

    #[test]
    fn unknown_key_is_named() {
        match parse_run_config("colour: blue\n") {
            Err(Error::UnknownKey(k)) => assert_eq!(k, "colour"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_override_is_unset() {
        let c = parse_run_config("niter_override:\ndxl_override: 0.5\n").unwrap();
        assert_eq!(c.override_niter, None);
        assert_eq!(c.override_dxl, Some(0.5));
    }

    #[test]
    fn text_round_trip() {
        let c = parse_run_config(BOUND).unwrap();
        assert_eq!(parse_run_config(&c.to_text()).unwrap(), c);
    }

    proptest! {
        #[test]
        fn validation_matches_invariants(
            e_min in -5.0f64..5.0, e_max in -5.0f64..5.0,
            x_min in -5.0f64..5.0, x_max in -5.0f64..5.0,
            y_min in -5.0f64..5.0, y_max in -5.0f64..5.0,
            eps in -1.0f64..1.0, fac in -1.0f64..1.0,
            elastic: bool, modified: bool,
        ) {
            let c = RunConfig {
                e_min, e_max,
                region: CamRegion { x_min, x_max, y_min, y_max },
                froissart_eps: eps, noise_fac: fac,
                elastic_channel: elastic, modified_mulholland: modified,
                ..RunConfig::default()
            };
            let valid = e_min < e_max && x_min < x_max && y_min <= y_max
                && eps >= 0.0 && fac >= 0.0 && (!modified || elastic);
            prop_assert_eq!(c.validate().is_ok(), valid);
        }
    }
}
