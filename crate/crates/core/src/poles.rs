//! Selection of Regge poles in a window of the CAM plane, removal of
//! Froissart doublets, residues and conjugate-point values.

use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mp::{cabs, to_c64, Real};
use crate::pade::{PadeModel, POLE_EVALUATION_GUARD};

/// Closed rectangle `x_min <= Re J <= x_max`, `y_min <= Im J <= y_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CamRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl CamRegion {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let r = CamRegion {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) || !(self.y_min <= self.y_max) {
            return Err(Error::Validation(format!(
                "CAM region needs x_min < x_max and y_min <= y_max, got [{}, {}] x [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x_min && z.re <= self.x_max && z.im >= self.y_min && z.im <= self.y_max
    }
}

/// One Regge pole at one energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub position_j: Complex64,
    /// `J + 1/2`.
    pub lambda: Complex64,
    /// Residue of S with respect to λ (the same as with respect to J).
    pub residue: Complex64,
    /// `S*(λ*)` continued to the pole.
    pub conj_value: Complex64,
    /// meV.
    pub energy: f64,
}

impl PoleRecord {
    pub fn new(position_j: Complex64, residue: Complex64, conj_value: Complex64, energy: f64) -> Self {
        PoleRecord {
            position_j,
            lambda: position_j + 0.5,
            residue,
            conj_value,
            energy,
        }
    }
}

/// Poles and zeros of the model inside `region`.
pub fn select_in_region<T: Real>(model: &PadeModel<T>, region: &CamRegion) -> (Vec<Complex64>, Vec<Complex64>) {
    let pick = |list: &[Complex<T>]| {
        list.iter()
            .map(to_c64)
            .filter(|z| region.contains(*z))
            .collect::<Vec<_>>()
    };
    (pick(&model.poles), pick(&model.zeros))
}

/// Deletes pole-zero pairs closer than `eps`, closest pairs first; each
/// pole and zero takes part in at most one pair.
pub fn remove_froissart(poles: &[Complex64], zeros: &[Complex64], eps: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in poles.iter().enumerate() {
        for (j, z) in zeros.iter().enumerate() {
            let d = (p - z).norm();
            if d < eps {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pole_gone = vec![false; poles.len()];
    let mut zero_gone = vec![false; zeros.len()];
    for (_, i, j) in pairs {
        if !pole_gone[i] && !zero_gone[j] {
            pole_gone[i] = true;
            zero_gone[j] = true;
        }
    }
    let keep = |list: &[Complex64], gone: &[bool]| {
        list.iter()
            .zip(gone)
            .filter(|(_, g)| !**g)
            .map(|(z, _)| *z)
            .collect::<Vec<_>>()
    };
    (keep(poles, &pole_gone), keep(zeros, &zero_gone))
}

/// Distance below which two poles are not resolved as simple.
fn simple_pole_threshold<T: Real>() -> f64 {
    if T::digits() > f64::DIGITS + 1 {
        1e-40
    } else {
        1e-10
    }
}

fn check_simple<T: Real>(model: &PadeModel<T>, index: usize) -> Result<&Complex<T>> {
    let p = model.poles.get(index).ok_or_else(|| {
        Error::Validation(format!("pole index {index} out of range ({} poles)", model.poles.len()))
    })?;
    let nearest = model
        .poles
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, q)| cabs(&(p.clone() - q.clone())).to_f64())
        .fold(f64::INFINITY, f64::min);
    if nearest <= simple_pole_threshold::<T>() {
        return Err(Error::NonSimplePole {
            index,
            distance: nearest,
        });
    }
    Ok(p)
}

/// Residue of the model at its pole `index`.
pub fn residue_at<T: Real>(model: &PadeModel<T>, index: usize) -> Result<Complex<T>> {
    let p = check_simple(model, index)?.clone();
    let sht = T::from_f64(model.sht);
    let x = Complex::new(p.re.clone() - sht.clone(), p.im.clone());
    let shift = |r: &Complex<T>| Complex::new(r.re.clone() - sht.clone(), r.im.clone());
    let others: Vec<Complex<T>> = model
        .poles
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, q)| shift(q))
        .collect();
    let zeros: Vec<Complex<T>> = model.zeros.iter().map(shift).collect();

    let mut value = model.k_const.clone();
    let paired = zeros.len().min(others.len());
    for i in 0..paired {
        value = value * ((x.clone() - zeros[i].clone()) / (x.clone() - others[i].clone()));
    }
    for z in &zeros[paired..] {
        value = value * (x.clone() - z.clone());
    }
    for q in &others[paired..] {
        value = value / (x.clone() - q.clone());
    }
    if !model.phase.is_zero() {
        value = value * model.phase.factor(&p);
    }
    Ok(value)
}

/// `S*(λ*)` continued to the pole `index`: the conjugated model with
/// conjugated zeros and poles, evaluated at the pole itself.
pub fn conjugate_value<T: Real>(model: &PadeModel<T>, index: usize) -> Result<Complex<T>> {
    let p = check_simple(model, index)?.clone();
    let sht = T::from_f64(model.sht);
    let x = Complex::new(p.re.clone() - sht.clone(), p.im.clone());
    let shift = |r: &Complex<T>| Complex::new(r.re.clone() - sht.clone(), -r.im.clone());
    let poles: Vec<Complex<T>> = model.poles.iter().map(shift).collect();
    let zeros: Vec<Complex<T>> = model.zeros.iter().map(shift).collect();
    let guard = T::from_f64(POLE_EVALUATION_GUARD);
    for (i, q) in poles.iter().enumerate() {
        if cabs(&(x.clone() - q.clone())) < guard {
            return Err(Error::AtPole(format!(
                "pole {index} at {} coincides with the conjugate of pole {i}",
                to_c64(&p)
            )));
        }
    }
    let mut value = model.k_const.conj();
    let paired = zeros.len().min(poles.len());
    for i in 0..paired {
        value = value * ((x.clone() - zeros[i].clone()) / (x.clone() - poles[i].clone()));
    }
    for z in &zeros[paired..] {
        value = value * (x.clone() - z.clone());
    }
    for q in &poles[paired..] {
        value = value / (x.clone() - q.clone());
    }
    if !model.phase.is_zero() {
        // exp(-i(a p² + b p + c)) with real coefficients.
        let phi = model.phase.at(&p);
        let minus_i = Complex::new(T::zero(), -T::one());
        value = value * crate::mp::cexp(&(phi * minus_i));
    }
    Ok(value)
}

/// Poles of the model in `region` after Froissart filtering, with residues
/// and conjugate-point values.
pub fn analyse_poles<T: Real>(model: &PadeModel<T>, region: &CamRegion, eps: f64, energy: f64) -> Result<Vec<PoleRecord>> {
    let (poles, zeros) = select_in_region(model, region);
    let (poles, _) = remove_froissart(&poles, &zeros, eps);
    let mut out = Vec::with_capacity(poles.len());
    for p in poles {
        let index = model
            .poles
            .iter()
            .position(|q| to_c64(q) == p)
            .expect("selected pole comes from the model");
        let residue = to_c64(&residue_at(model, index)?);
        let conj_value = to_c64(&conjugate_value(model, index)?);
        out.push(PoleRecord::new(p, residue, conj_value, energy));
    }
    out.sort_by(|a, b| {
        a.position_j
            .re
            .total_cmp(&b.position_j.re)
            .then(a.position_j.im.total_cmp(&b.position_j.im))
    });
    Ok(out)
}

/// `(1/2πi) ∮ f dz` over a circle of `radius` about `center` with the
/// `n`-point trapezoid rule.
pub fn contour_residue(f: impl Fn(Complex64) -> Result<Complex64>, center: Complex64, radius: f64, n: usize) -> Result<Complex64> {
    let mut acc = Complex64::zero();
    for k in 0..n {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let w = Complex64::from_polar(radius, theta);
        // dz = i w dθ, so (1/2πi) f dz = f w dθ / 2π.
        acc += f(center + w)? * w;
    }
    Ok(acc / n as f64 * Complex64::one())
}
