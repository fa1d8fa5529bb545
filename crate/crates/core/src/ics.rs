//! Integral cross sections: partial-wave sums, the continuous-λ integral,
//! Mulholland pole terms and the subtraction of resonance trajectories.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::data::{ChannelSpec, SMatrixRecord, SeriesPoint};
use crate::error::{Error, Result};
use crate::pade::PadeModel;
use crate::poles::{conjugate_value, residue_at, PoleRecord};
use crate::quadrature::integrate;
use crate::units::HBAR2_OVER_2U;

/// Relative tolerance of the λ quadratures.
pub const QUAD_EPSREL: f64 = 1e-8;
/// Absolute tolerance of the λ quadratures before the `2π/k²` prefactor.
pub const QUAD_EPSABS: f64 = 1e-10;
pub const QUAD_LIMIT: usize = 500;
/// Smallest admissible `|1 + exp(∓2iπλ)|`.
pub const MULHOLLAND_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveNumber {
    /// Å⁻¹.
    pub k: f64,
    pub energy: f64,
    pub reduced_mass: f64,
}

impl WaveNumber {
    /// `2π/k²` in Å².
    pub fn prefactor(&self) -> f64 {
        2.0 * PI / (self.k * self.k)
    }
}

/// Wave number for a collision energy in meV and a reduced mass in Daltons.
pub fn wavenumber(energy: f64, reduced_mass: f64) -> Result<WaveNumber> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::Validation(format!("wave number needs a positive energy, got {energy} meV")));
    }
    if !(reduced_mass > 0.0) || !reduced_mass.is_finite() {
        return Err(Error::Validation(format!("reduced mass must be positive, got {reduced_mass}")));
    }
    Ok(WaveNumber {
        k: (reduced_mass * energy / HBAR2_OVER_2U).sqrt(),
        energy,
        reduced_mass,
    })
}

/// Per-energy pieces of the cross section, all in Å².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub energy: f64,
    pub sigma_exact: f64,
    pub sigma_pade: f64,
    pub sigma_int: f64,
    pub mull_terms: BTreeMap<String, f64>,
    pub sigma_smooth: f64,
    pub pade_error: f64,
}

impl Decomposition {
    pub fn new(energy: f64, sigma_exact: f64, sigma_pade: f64, sigma_int: f64, pade_error: f64) -> Self {
        Decomposition {
            energy,
            sigma_exact,
            sigma_pade,
            sigma_int,
            mull_terms: BTreeMap::new(),
            sigma_smooth: sigma_exact,
            pade_error,
        }
    }

    pub fn add_trajectory(&mut self, id: &str, value: f64) {
        self.mull_terms.insert(id.to_string(), value);
        self.sigma_smooth = self.sigma_exact - self.mull_terms.values().sum::<f64>();
    }
}

fn weight(s: Complex64, elastic: bool) -> f64 {
    if elastic {
        (s - 1.0).norm_sqr()
    } else {
        s.norm_sqr()
    }
}

fn first_term(record: &SMatrixRecord, channel: &ChannelSpec) -> Result<usize> {
    let j_min = channel.j_min();
    if j_min >= record.nread {
        return Err(Error::Validation(format!(
            "J_min = {j_min} leaves no partial waves among the {} supplied",
            record.nread
        )));
    }
    Ok(j_min)
}

/// Partial-wave sum over the supplied S values.
pub fn pws_cross_section(record: &SMatrixRecord, channel: &ChannelSpec) -> Result<f64> {
    let j_min = first_term(record, channel)?;
    let k = wavenumber(record.energy, channel.reduced_mass)?;
    let sum: f64 = (j_min..record.nread)
        .map(|j| (j as f64 + 0.5) * weight(record.s_values[j], channel.elastic))
        .sum();
    Ok(k.prefactor() * sum)
}

/// Partial-wave sum with the model in place of the data over the fitted
/// partial waves, and the largest deviation from the data there. Waves
/// beyond the fit window keep their data values.
pub fn pws_from_model(model: &PadeModel, record: &SMatrixRecord, channel: &ChannelSpec) -> Result<(f64, f64)> {
    let j_min = first_term(record, channel)?;
    let k = wavenumber(record.energy, channel.reduced_mass)?;
    let mut sum = 0.0;
    let mut worst: f64 = 0.0;
    for j in j_min..record.nread {
        let data = record.s_values[j];
        let s = if j >= record.jstart && j <= record.jfin {
            let v = model.eval_real(j as f64)?;
            worst = worst.max((v - data).norm());
            v
        } else {
            data
        };
        sum += (j as f64 + 0.5) * weight(s, channel.elastic);
    }
    Ok((k.prefactor() * sum, worst))
}

/// Upper λ limit by default: the last fitted partial wave.
pub fn default_lambda_max(record: &SMatrixRecord) -> f64 {
    record.jfin as f64 + 0.5
}

/// `(2π/k²) ∫ w(λ) λ dλ` from `λ = J_min` to `lambda_max` along the real
/// axis of the model.
pub fn integral_term(model: &PadeModel, channel: &ChannelSpec, k: &WaveNumber, lambda_max: f64) -> Result<f64> {
    let lo = channel.j_min() as f64;
    if !(lambda_max > lo + 0.5) {
        return Err(Error::Validation(format!(
            "lambda_max = {lambda_max} must exceed J_min + 1/2 = {}",
            lo + 0.5
        )));
    }
    let mut failure = None;
    let f = |lam: f64| match model.eval_real(lam - 0.5) {
        Ok(s) => weight(s, channel.elastic) * lam,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let r = integrate(f, lo, lambda_max, QUAD_EPSABS, QUAD_EPSREL, QUAD_LIMIT)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(k.prefactor() * r.value)
}

/// `(8π²/k²) Im{ λ R / (1 + exp(-2iπλ)) }` for a residue `R` of the
/// continued weight function.
fn pole_term(residue_f: Complex64, lambda: Complex64, k: &WaveNumber) -> Result<f64> {
    let den = 1.0 + (Complex64::new(0.0, -2.0 * PI) * lambda).exp();
    if !(den.norm() > MULHOLLAND_GUARD) {
        return Err(Error::BoundStateLike(lambda));
    }
    Ok(4.0 * PI * k.prefactor() * (lambda * residue_f / den).im)
}

/// Mulholland contribution of one pole. For elastic channels the
/// conjugate-point value enters as `S*(λ*) - 1`.
pub fn mulholland_term(pole: &PoleRecord, k: &WaveNumber, elastic: bool) -> Result<f64> {
    let conj = if elastic { pole.conj_value - 1.0 } else { pole.conj_value };
    pole_term(pole.residue * conj, pole.lambda, k)
}

/// Pole term of the modified decomposition, `(8π²/k²) Im{λ Res / (1 + exp(2iπλ))}`.
pub fn modified_mulholland_term(pole: &PoleRecord, k: &WaveNumber, elastic: bool) -> Result<f64> {
    if !elastic {
        return Err(Error::Usage(
            "the modified Mulholland term applies to single-channel elastic scattering only".into(),
        ));
    }
    let den = 1.0 + (Complex64::new(0.0, 2.0 * PI) * pole.lambda).exp();
    if !(den.norm() > MULHOLLAND_GUARD) {
        return Err(Error::BoundStateLike(pole.lambda));
    }
    Ok(4.0 * PI * k.prefactor() * (pole.lambda * pole.residue / den).im)
}

/// Distance below which a pole counts as lying on the imaginary-axis contour.
const CONTOUR_CLEARANCE: f64 = 1e-6;

/// `f(λ) = (S(λ) - 1)(S*(λ*) - 1)` from the model.
fn continued_weight(model: &PadeModel, lambda: Complex64) -> Result<Complex64> {
    let j = lambda - 0.5;
    let s = model.eval(j)?;
    let s_bar = model.eval(j.conj())?.conj();
    Ok((s - 1.0) * (s_bar - 1.0))
}

/// `Re ∫_0^{i·cutoff} (4π f/k²) λ / (1 + exp(-2iπλ)) dλ` for single-channel
/// elastic scattering.
pub fn imag_axis_term(model: &PadeModel, k: &WaveNumber, cutoff: f64) -> Result<f64> {
    if !(cutoff > 0.0) {
        return Err(Error::Validation(format!("cutoff must be positive, got {cutoff}")));
    }
    for p in &model.poles {
        let lam = p + 0.5;
        if lam.re.abs() < CONTOUR_CLEARANCE && lam.im.abs() <= cutoff + CONTOUR_CLEARANCE {
            return Err(Error::AtPole(format!("pole at J = {p} lies on the imaginary λ axis")));
        }
    }
    let mut failure = None;
    // λ = iy, dλ = i dy.
    let f = |y: f64| {
        let lam = Complex64::new(0.0, y);
        match continued_weight(model, lam) {
            Ok(w) => {
                let den = 1.0 + (2.0 * PI * y).exp();
                (w * lam * Complex64::i() / den).re
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let r = integrate(f, 0.0, cutoff, QUAD_EPSABS, QUAD_EPSREL, QUAD_LIMIT)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(2.0 * k.prefactor() * r.value)
}

/// Sum of the pole terms of `f(λ) = (S - 1)(S* - 1)` over its poles with
/// `0 < Re λ < re_lambda_max` and `0 < Im λ < im_lambda_max`: the poles of
/// S there and the reflections of the poles of S below the axis.
/// Single-channel elastic scattering.
pub fn elastic_pole_sum(model: &PadeModel, k: &WaveNumber, re_lambda_max: f64, im_lambda_max: f64) -> Result<f64> {
    let mut total = 0.0;
    for (i, p) in model.poles.iter().enumerate() {
        let lam = p + 0.5;
        if !(lam.re > 0.0 && lam.re < re_lambda_max) || lam.im == 0.0 || lam.im.abs() >= im_lambda_max {
            continue;
        }
        let res = residue_at(model, i)?;
        if lam.im > 0.0 {
            let conj = conjugate_value(model, i)?;
            total += pole_term(res * (conj - 1.0), lam, k)?;
        } else {
            // Pole of S*(λ*) at the reflected point, residue conj(res).
            let at = lam.conj();
            let s = model.eval(at - 0.5)?;
            total += pole_term((s - 1.0) * res.conj(), at, k)?;
        }
    }
    Ok(total)
}

/// `σ_PWS - (integral - imaginary-axis term + pole sum)` for single-channel
/// elastic scattering. The real-axis integral ends at the last fitted
/// partial wave and only poles left of that line are enclosed.
pub fn closure_residual(
    model: &PadeModel,
    record: &SMatrixRecord,
    channel: &ChannelSpec,
    cutoff: f64,
    im_lambda_max: f64,
) -> Result<f64> {
    let k = wavenumber(record.energy, channel.reduced_mass)?;
    let pws = pws_cross_section(record, channel)?;
    let lambda_max = default_lambda_max(record);
    let term1 = integral_term(model, channel, &k, lambda_max)?;
    let term2 = imag_axis_term(model, &k, cutoff)?;
    let poles = elastic_pole_sum(model, &k, lambda_max, im_lambda_max)?;
    Ok(pws - (term1 - term2 + poles))
}

/// `|1/(1 + exp(-2iπλ)) + Σ_{M=1}^{terms} exp(2iπMJ)|` with `J = λ - 1/2`.
pub fn geometric_identity_residual(lambda: Complex64, terms: usize) -> f64 {
    let j = lambda - 0.5;
    let lhs = 1.0 / (1.0 + (Complex64::new(0.0, -2.0 * PI) * lambda).exp());
    let ratio = (Complex64::new(0.0, 2.0 * PI) * j).exp();
    let mut power = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for _ in 0..terms {
        power *= ratio;
        sum += power;
    }
    (lhs + sum).norm()
}

/// `σ_exact - Σ I^Mull` pointwise. Trajectory series may cover only part
/// of the grid; every energy they list must be on it.
pub fn subtract_trajectories(exact: &[SeriesPoint], mull: &[Vec<SeriesPoint>]) -> Result<Vec<SeriesPoint>> {
    let mut offending: Vec<f64> = mull
        .iter()
        .flatten()
        .map(|p| p.energy)
        .filter(|e| !exact.iter().any(|x| x.energy == *e))
        .collect();
    if !offending.is_empty() {
        offending.sort_by(f64::total_cmp);
        offending.dedup();
        return Err(Error::GridMismatch(offending));
    }
    Ok(exact
        .iter()
        .map(|x| {
            let sigma = x.values.first().copied().unwrap_or(f64::NAN);
            let resonant: f64 = mull
                .iter()
                .filter_map(|series| series.iter().find(|p| p.energy == x.energy))
                .map(|p| p.values.first().copied().unwrap_or(0.0))
                .sum();
            SeriesPoint::new(x.energy, vec![sigma - resonant])
        })
        .collect())
}
