//! Type-II rational interpolation of S(J) at the physical partial waves,
//! with iterative removal of a smooth quadratic phase.
//!
//! The approximant is
//!
//! ```text
//! S(J) ≈ K · exp(i(aJ² + bJ + c)) · Π(J - Z_i) / Π(J - P_i)
//! ```
//!
//! built from the linearised conditions `p(J_j) - S_j q(J_j) = 0`. Generic
//! code runs at `f64` or at the extended precision of [`MpReal`].

use nalgebra::{DMatrix, DVector};
use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::SMatrixRecord;
use crate::error::{Error, Result};
use crate::linalg::{pivoted_qr, CMatrix};
use crate::mp::{cabs, cexp, from_c64, to_c64, MpReal, PrecisionGuard, Real};
use crate::poly::{degree, roots};

/// Extended precision is switched on automatically above this many partial waves.
pub const EXTENDED_PRECISION_THRESHOLD: usize = 40;

/// Distance below which an argument counts as sitting on a pole.
pub const POLE_EVALUATION_GUARD: f64 = 1e-13;

/// Quadratic phase `aJ² + bJ + c` in radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhasePoly {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PhasePoly {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        PhasePoly { a, b, c }
    }

    pub fn at<T: Real>(&self, j: &Complex<T>) -> Complex<T> {
        let a = T::from_f64(self.a);
        let b = T::from_f64(self.b);
        let c = Complex::new(T::from_f64(self.c), T::zero());
        j.clone() * j.clone() * a + j.clone() * b + c
    }

    /// `exp(i φ(J))`.
    pub fn factor<T: Real>(&self, j: &Complex<T>) -> Complex<T> {
        let phi = self.at(j);
        cexp(&(phi * Complex::new(T::zero(), T::one())))
    }

    pub fn add(&self, other: &PhasePoly) -> PhasePoly {
        PhasePoly::new(self.a + other.a, self.b + other.b, self.c + other.c)
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0 && self.c == 0.0
    }
}

/// The factored rational approximant with its quadratic phase prefactor.
#[derive(Clone, Debug)]
pub struct PadeModel<T = f64> {
    pub k_const: Complex<T>,
    pub phase: PhasePoly,
    pub zeros: Vec<Complex<T>>,
    pub poles: Vec<Complex<T>>,
    /// Shift of the evaluation variable; products use `J - sht`.
    pub sht: f64,
    /// Original data the model reproduces.
    pub fit_points: Vec<(f64, Complex64)>,
    /// Decimal digits of the arithmetic used to build the model.
    pub precision_digits: u32,
}

impl<T: Real> PadeModel<T> {
    /// Value at complex `J`.
    pub fn evaluate(&self, j: &Complex<T>) -> Result<Complex<T>> {
        self.evaluate_parts(j, true, true, &|_| true)
    }

    /// Value at complex `J` keeping only the poles and zeros accepted by
    /// `keep`, optionally without `K` or the phase factor.
    fn evaluate_parts(
        &self,
        j: &Complex<T>,
        with_k: bool,
        with_phase: bool,
        keep: &dyn Fn(&Complex<T>) -> bool,
    ) -> Result<Complex<T>> {
        let sht = T::from_f64(self.sht);
        let x = Complex::new(j.re.clone() - sht.clone(), j.im.clone());
        let shift = |r: &Complex<T>| Complex::new(r.re.clone() - sht.clone(), r.im.clone());
        let guard = T::from_f64(POLE_EVALUATION_GUARD);
        let poles: Vec<Complex<T>> = self.poles.iter().filter(|p| keep(p)).map(shift).collect();
        let zeros: Vec<Complex<T>> = self.zeros.iter().filter(|z| keep(z)).map(shift).collect();
        for (i, p) in poles.iter().enumerate() {
            if cabs(&(x.clone() - p.clone())) < guard {
                return Err(Error::AtPole(format!(
                    "J = {} lies within {POLE_EVALUATION_GUARD:e} of pole {i} at {}",
                    to_c64(j),
                    to_c64(p)
                )));
            }
        }
        // Pair factors so that large partial products cancel early.
        let mut value = if with_k { self.k_const.clone() } else { Complex::one() };
        let paired = zeros.len().min(poles.len());
        for i in 0..paired {
            value = value * ((x.clone() - zeros[i].clone()) / (x.clone() - poles[i].clone()));
        }
        for z in &zeros[paired..] {
            value = value * (x.clone() - z.clone());
        }
        for p in &poles[paired..] {
            value = value / (x.clone() - p.clone());
        }
        if with_phase && !self.phase.is_zero() {
            value = value * self.phase.factor(j);
        }
        Ok(value)
    }

    /// Largest relative interpolation residual over the fit points.
    pub fn max_fit_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &(j, s) in &self.fit_points {
            let v = self.evaluate(&Complex::new(T::from_f64(j), T::zero()))?;
            let s_t: Complex<T> = from_c64(s);
            let r = cabs(&(v - s_t)).to_f64() / s.norm().max(1e-300);
            worst = worst.max(r);
        }
        Ok(worst)
    }

    pub fn to_f64(&self) -> PadeModel<f64> {
        PadeModel {
            k_const: to_c64(&self.k_const),
            phase: self.phase,
            zeros: self.zeros.iter().map(to_c64).collect(),
            poles: self.poles.iter().map(to_c64).collect(),
            sht: self.sht,
            fit_points: self.fit_points.clone(),
            precision_digits: self.precision_digits,
        }
    }

    pub fn from_f64(model: &PadeModel<f64>) -> Self {
        PadeModel {
            k_const: from_c64(model.k_const),
            phase: model.phase,
            zeros: model.zeros.iter().map(|&z| from_c64(z)).collect(),
            poles: model.poles.iter().map(|&z| from_c64(z)).collect(),
            sht: model.sht,
            fit_points: model.fit_points.clone(),
            precision_digits: model.precision_digits,
        }
    }
}

impl PadeModel<f64> {
    /// Value at complex `J` in double precision.
    pub fn eval(&self, j: Complex64) -> Result<Complex64> {
        self.evaluate(&j)
    }

    /// Value at real `J`.
    pub fn eval_real(&self, j: f64) -> Result<Complex64> {
        self.evaluate(&Complex64::new(j, 0.0))
    }
}

/// Double-precision entry point: builds at `precision_digits` (anything
/// above double precision engages the extended path) and returns the
/// model rounded to `f64`.
pub fn build_rational_interpolant(points: &[(f64, Complex64)], sht: f64, precision_digits: u32) -> Result<PadeModel> {
    if precision_digits > f64::DIGITS + 1 {
        let _g = PrecisionGuard::new(precision_digits);
        let pts: Vec<(f64, Complex<MpReal>)> = points.iter().map(|&(j, s)| (j, from_c64(s))).collect();
        let mut m = build_interpolant::<MpReal>(&pts, sht)?;
        m.fit_points = points.to_vec();
        Ok(m.to_f64())
    } else {
        let mut m = build_interpolant::<f64>(points, sht)?;
        m.fit_points = points.to_vec();
        Ok(m)
    }
}

/// Folds the largest roots into the leading coefficient when their factor
/// Π(1 - t/r) equals 1 within `tol` at every node; such roots come from
/// roundoff-sized leading coefficients and are invisible on the data.
fn fold_distant_roots<T: Real>(
    lead: Complex<T>,
    roots: Vec<Complex<T>>,
    nodes: &[T],
    tol: &T,
) -> (Complex<T>, Vec<Complex<T>>) {
    let mut roots = roots;
    roots.sort_by(|a, b| cabs(b).partial_cmp(&cabs(a)).unwrap_or(std::cmp::Ordering::Equal));
    let invisible = |far: &[Complex<T>]| {
        nodes.iter().all(|t| {
            let tc = Complex::new(t.clone(), T::zero());
            let f = far.iter().fold(Complex::<T>::one(), |acc, r| acc * (Complex::<T>::one() - tc.clone() / r.clone()));
            cabs(&(f - Complex::one())) <= *tol
        })
    };
    let k = (1..=roots.len()).rev().find(|&k| invisible(&roots[..k])).unwrap_or(0);
    let mut lead = lead;
    for r in &roots[..k] {
        lead = -lead * r.clone();
    }
    (lead, roots.split_off(k))
}

/// Relative rank threshold of the interpolation system.
fn rank_tolerance<T: Real>(unknowns: usize) -> T {
    T::epsilon() * T::from_f64(64.0 * unknowns as f64)
}

/// Builds the approximant at the working precision of `T` (hold a
/// [`PrecisionGuard`] for [`MpReal`]). `fit_points` of the result are the
/// supplied values rounded to `f64`.
pub fn build_interpolant<T: Real>(points: &[(f64, Complex<T>)], sht: f64) -> Result<PadeModel<T>> {
    let npts = points.len();
    if npts < 4 {
        return Err(Error::Validation(format!(
            "at least 4 interpolation points are needed, got {npts}"
        )));
    }
    for (i, a) in points.iter().enumerate() {
        if !a.0.is_finite() {
            return Err(Error::Validation(format!("interpolation point {i} has non-finite J")));
        }
        if points[..i].iter().any(|b| b.0 == a.0) {
            return Err(Error::Singular(format!("duplicated interpolation point J = {}", a.0)));
        }
    }

    let h = points.iter().map(|p| (p.0 - sht).abs()).fold(0.0, f64::max);
    let ht = T::from_f64(h);
    let t: Vec<T> = points.iter().map(|p| T::from_f64(p.0 - sht) / ht.clone()).collect();
    let s: Vec<Complex<T>> = points.iter().map(|p| p.1.clone()).collect();

    let (mut n, mut m) = (npts / 2, (npts - 1) / 2);
    let mut chosen: Option<(usize, usize, Vec<Complex<T>>)> = None;
    loop {
        let a = system_matrix(&t, &s, n, m);
        let qr = pivoted_qr(&a, &rank_tolerance::<T>(n + m + 2));
        if qr.nullity() == 0 {
            break;
        }
        let x = qr.null_vector().expect("nullity is positive");
        let unique = qr.nullity() == 1;
        chosen = Some((n, m, x));
        // Lower both degrees while the data are consistent with a smaller
        // rational function.
        if unique || m == 0 {
            break;
        }
        n -= 1;
        m -= 1;
    }
    let (n, _m, x) = chosen.ok_or_else(|| Error::Singular("interpolation system has full column rank".into()))?;

    let p: Vec<Complex<T>> = x[..=n].to_vec();
    let q: Vec<Complex<T>> = x[n + 1..].to_vec();
    let Some(dq) = degree(&q) else {
        return Err(Error::Singular("denominator vanishes identically".into()));
    };
    let to_j = |z: Complex<T>| Complex::new(z.re * ht.clone() + T::from_f64(sht), z.im * ht.clone());

    let fold_tol = T::epsilon().sqrt();
    let (q_lead, pole_t) = fold_distant_roots(q[dq].clone(), roots(&q), &t, &fold_tol);
    let (k_const, zeros) = match degree(&p) {
        None => (Complex::zero(), Vec::new()),
        Some(dp) => {
            let (p_lead, zero_t) = fold_distant_roots(p[dp].clone(), roots(&p), &t, &fold_tol);
            let exp = pole_t.len() as i32 - zero_t.len() as i32;
            let mut k = p_lead / q_lead;
            let scale = if exp >= 0 { ht.clone() } else { T::one() / ht.clone() };
            for _ in 0..exp.unsigned_abs() {
                k = k.scale(scale.clone());
            }
            (k, zero_t.into_iter().map(to_j).collect())
        }
    };
    let poles: Vec<Complex<T>> = pole_t.into_iter().map(to_j).collect();

    let finite = |z: &Complex<T>| {
        let c = to_c64(z);
        c.re.is_finite() && c.im.is_finite()
    };
    if !finite(&k_const) || !zeros.iter().all(finite) || !poles.iter().all(finite) {
        return Err(Error::Overflow {
            digits: T::digits(),
            message: "approximant coefficients are not representable".into(),
        });
    }

    Ok(PadeModel {
        k_const,
        phase: PhasePoly::default(),
        zeros,
        poles,
        sht,
        fit_points: points.iter().map(|(j, s)| (*j, to_c64(s))).collect(),
        precision_digits: T::digits(),
    })
}

/// Rows `[t^0..t^n, -S t^0..-S t^m]`, each scaled to unit norm.
fn system_matrix<T: Real>(t: &[T], s: &[Complex<T>], n: usize, m: usize) -> CMatrix<T> {
    let mut a = CMatrix::zeros(t.len(), n + m + 2);
    for (row, (tj, sj)) in t.iter().zip(s).enumerate() {
        let mut powers = Vec::with_capacity(n.max(m) + 1);
        let mut pw = T::one();
        for _ in 0..=n.max(m) {
            powers.push(pw.clone());
            pw = pw * tj.clone();
        }
        let sum_p = powers[..=n].iter().fold(T::zero(), |acc, v| acc + v.clone() * v.clone());
        let sum_q = powers[..=m].iter().fold(T::zero(), |acc, v| acc + v.clone() * v.clone());
        let norm = (sum_p + sum_q * sj.norm_sqr()).sqrt();
        for (k, pw) in powers[..=n].iter().enumerate() {
            a.set(row, k, Complex::new(pw.clone() / norm.clone(), T::zero()));
        }
        for (k, pw) in powers[..=m].iter().enumerate() {
            a.set(row, n + 1 + k, -sj.clone().scale(pw.clone() / norm.clone()));
        }
    }
    a
}

/// Makes successive phase differences at most π by adding multiples of 2π.
pub fn unwrap_phases(raw: &[f64]) -> Vec<f64> {
    use std::f64::consts::PI;
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (i, &p) in raw.iter().enumerate() {
        if i > 0 {
            let prev = out[i - 1];
            let mut d = p + offset - prev;
            while d > PI {
                offset -= 2.0 * PI;
                d -= 2.0 * PI;
            }
            while d < -PI {
                offset += 2.0 * PI;
                d += 2.0 * PI;
            }
        }
        out.push(p + offset);
    }
    out
}

/// Least-squares `aJ² + bJ + c` through `(J, φ)`; minimum-norm when the
/// design matrix is rank deficient.
pub fn fit_quadratic(js: &[f64], phases: &[f64]) -> Result<PhasePoly> {
    if js.len() < 3 || js.len() != phases.len() {
        return Err(Error::Validation(format!(
            "quadratic phase fit needs at least 3 points, got {}",
            js.len()
        )));
    }
    let a = DMatrix::from_fn(js.len(), 3, |i, k| match k {
        0 => js[i] * js[i],
        1 => js[i],
        _ => 1.0,
    });
    let b = DVector::from_column_slice(phases);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let x = svd
        .solve(&b, smax * 1e-13)
        .map_err(|e| Error::Singular(format!("phase fit: {e}")))?;
    Ok(PhasePoly::new(x[0], x[1], x[2]))
}

/// Quadratic fit to the unwrapped phase of the model with every pole and
/// zero of `|Im J| < dxl` divided out, sampled on `grid`.
pub fn extract_quadratic_phase<T: Real>(model: &PadeModel<T>, dxl: f64, grid: &[f64]) -> Result<PhasePoly> {
    if !(dxl > 0.0) {
        return Err(Error::Validation(format!("dxl must be positive, got {dxl}")));
    }
    let strip = T::from_f64(dxl);
    let keep = |z: &Complex<T>| z.im.abs() >= strip;
    let mut js = Vec::with_capacity(grid.len());
    let mut raw = Vec::with_capacity(grid.len());
    for &j in grid {
        let v = match model.evaluate_parts(&Complex::new(T::from_f64(j), T::zero()), true, true, &keep) {
            Ok(v) => to_c64(&v),
            Err(_) => continue,
        };
        if v.norm() > 0.0 && v.re.is_finite() && v.im.is_finite() {
            js.push(j);
            raw.push(v.arg());
        }
    }
    if js.len() < 3 {
        return Err(Error::Validation(format!(
            "only {} usable grid points for the phase fit",
            js.len()
        )));
    }
    fit_quadratic(&js, &unwrap_phases(&raw))
}

/// Effective reconstruction parameters after applying configuration
/// overrides to a record's header.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionSettings {
    pub niter: usize,
    pub dxl: f64,
    pub strip_prephase: bool,
    pub extended: bool,
    pub digits: u32,
}

impl ReconstructionSettings {
    /// Resolves overrides and returns the (possibly truncated) record with
    /// the settings to use for it.
    pub fn resolve(record: &SMatrixRecord, config: &RunConfig) -> Result<(SMatrixRecord, Self)> {
        let mut rec = match config.override_nread {
            Some(n) => record.truncated(n)?,
            None => record.clone(),
        };
        if let Some(niter) = config.override_niter {
            rec.niter = niter;
        }
        if let Some(dxl) = config.override_dxl {
            rec.dxl = dxl;
        }
        let settings = ReconstructionSettings {
            niter: rec.niter,
            dxl: rec.dxl,
            strip_prephase: config.strip_prephase,
            extended: config.use_extended_precision || rec.nread > EXTENDED_PRECISION_THRESHOLD,
            digits: config.precision_digits,
        };
        Ok((rec, settings))
    }
}

/// Quadratic through the unwrapped phases of the three highest-J points.
fn prephase(points: &[(f64, Complex64)]) -> Option<PhasePoly> {
    let tail = &points[points.len().checked_sub(3)?..];
    if tail.iter().any(|p| p.1.norm() == 0.0) {
        return None;
    }
    let js: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let ph = unwrap_phases(&tail.iter().map(|p| p.1.arg()).collect::<Vec<_>>());
    fit_quadratic(&js, &ph).ok()
}

/// Builds, extracts the smooth quadratic phase, removes it from the input
/// and rebuilds, `niter` times. The result carries the accumulated phase,
/// so it reproduces the original data.
pub fn iterate_reconstruction(record: &SMatrixRecord, config: &RunConfig) -> Result<PadeModel> {
    Ok(reconstruct(record, config)?.model)
}

/// A reconstructed model with its interpolation residual measured at the
/// precision it was built in.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub model: PadeModel,
    pub working_residual: f64,
}

/// [`iterate_reconstruction`], also reporting the residual before rounding
/// the model to double precision.
pub fn reconstruct(record: &SMatrixRecord, config: &RunConfig) -> Result<Reconstruction> {
    let (rec, settings) = ReconstructionSettings::resolve(record, config)?;
    if settings.extended {
        let _g = PrecisionGuard::new(settings.digits);
        let m = iterate_reconstruction_in::<MpReal>(&rec, &settings)?;
        Ok(Reconstruction { working_residual: m.max_fit_residual()?, model: m.to_f64() })
    } else {
        let m = iterate_reconstruction_in::<f64>(&rec, &settings)?;
        Ok(Reconstruction { working_residual: m.max_fit_residual()?, model: m })
    }
}

/// [`iterate_reconstruction`] at the working precision of `T`, with
/// already-resolved settings.
pub fn iterate_reconstruction_in<T: Real>(record: &SMatrixRecord, settings: &ReconstructionSettings) -> Result<PadeModel<T>> {
    record.validate()?;
    if settings.niter < 1 {
        return Err(Error::Validation("niter must be at least 1".into()));
    }
    let original = record.fit_points();
    let grid: Vec<f64> = original.iter().map(|p| p.0).collect();

    let mut total = PhasePoly::default();
    if settings.strip_prephase {
        if let Some(p) = prephase(&original) {
            total = p;
        }
    }
    let build = |phase: &PhasePoly| -> Result<PadeModel<T>> {
        let pts: Vec<(f64, Complex<T>)> = original
            .iter()
            .map(|&(j, s)| {
                let jt = Complex::new(T::from_f64(j), T::zero());
                let back = phase.factor(&jt).conj();
                (j, from_c64::<T>(s) * back)
            })
            .collect();
        build_interpolant(&pts, record.sht)
    };

    let mut model = build(&total)?;
    for _ in 0..settings.niter {
        let step = extract_quadratic_phase(&model, settings.dxl, &grid)?;
        total = total.add(&step);
        model = build(&total)?;
    }
    model.phase = total;
    model.fit_points = original;
    Ok(model)
}

/// Adds `fac·(u + iv)` to every S value, `u, v` uniform on [-1, 1] from a
/// generator seeded with `seed`.
pub fn inject_noise(record: &SMatrixRecord, fac: f64, seed: u64) -> SMatrixRecord {
    let mut r = record.clone();
    if fac == 0.0 {
        return r;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in &mut r.s_values {
        let u: f64 = rng.random_range(-1.0..=1.0);
        let v: f64 = rng.random_range(-1.0..=1.0);
        *s += Complex64::new(fac * u, fac * v);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample(f: impl Fn(f64) -> Complex64, n: usize) -> Vec<(f64, Complex64)> {
        (0..n).map(|j| (j as f64, f(j as f64))).collect()
    }

    fn nearest(list: &[Complex64], z: Complex64) -> f64 {
        list.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn recovers_first_order_rational() {
        let (z, p) = (c(2.0, 1.0), c(5.0, 0.3));
        let pts = sample(|j| (c(j, 0.0) - z) / (c(j, 0.0) - p), 5);
        let m = build_rational_interpolant(&pts, 2.0, 15).unwrap();
        assert!(nearest(&m.zeros, z) < 1e-8, "{:?}", m.zeros);
        assert!(nearest(&m.poles, p) < 1e-8, "{:?}", m.poles);
        assert!(m.max_fit_residual().unwrap() < 1e-12);
    }

    #[test]
    fn unequal_degrees_keep_every_finite_root() {
        let zs = [c(-12.8, -2.19), c(9.01, 0.25)];
        let ps = [c(-3.3, 2.8), c(0.9, -1.06), c(4.1, 0.15), c(5.6, 1.57), c(8.56, -1.39), c(-9.65, -1.5)];
        let _g = PrecisionGuard::new(64);
        let pts: Vec<(f64, Complex<MpReal>)> = (-15..=15)
            .map(|j| {
                let jc: Complex<MpReal> = from_c64(c(j as f64, 0.0));
                let mut v: Complex<MpReal> = from_c64(c(0.0, 2.0));
                for z in &zs {
                    v = v * (jc.clone() - from_c64::<MpReal>(*z));
                }
                for p in &ps {
                    v = v / (jc.clone() - from_c64::<MpReal>(*p));
                }
                (j as f64, v)
            })
            .collect();
        let m = build_interpolant::<MpReal>(&pts, 0.0).unwrap().to_f64();
        assert_eq!((m.zeros.len(), m.poles.len()), (2, 6));
        for z in zs {
            assert!(nearest(&m.zeros, z) < 1e-12, "{:?}", m.zeros);
        }
        for p in ps {
            assert!(nearest(&m.poles, p) < 1e-12, "{:?}", m.poles);
        }
        assert!(m.max_fit_residual().unwrap() < 1e-12);
    }

    #[test]
    fn constant_data_deflate() {
        let pts = sample(|_| c(0.5, 0.0), 6);
        let m = build_rational_interpolant(&pts, 0.0, 15).unwrap();
        for j in [0.3, 2.0, 7.5, -3.0] {
            assert!((m.eval_real(j).unwrap() - c(0.5, 0.0)).norm() < 1e-12);
        }
        assert!(m.zeros.len() - m.poles.len() <= 1);
    }

    #[test]
    fn zero_of_numerator_evaluates_to_zero() {
        let pts = sample(|j| (c(j, 0.0) - c(1.5, 0.2)) / (c(j, 0.0) - c(3.0, -0.4)), 7);
        let m = build_rational_interpolant(&pts, 3.0, 15).unwrap();
        for z in m.zeros.clone() {
            assert!(m.eval(z).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn evaluating_at_pole_is_an_error() {
        let pts = sample(|j| c(1.0, 0.0) / (c(j, 0.0) - c(2.5, 0.5)), 6);
        let m = build_rational_interpolant(&pts, 0.0, 15).unwrap();
        let p = m.poles[0];
        assert!(matches!(m.eval(p), Err(Error::AtPole(_))));
    }

    #[test]
    fn equal_degree_tends_to_k() {
        let pts = sample(|j| (c(j, 0.0) - c(1.0, 1.0)) / (c(j, 0.0) - c(4.0, 0.5)) * c(0.0, 2.0), 5);
        let m = build_rational_interpolant(&pts, 0.0, 15).unwrap();
        let far = m.eval(c(1e9, 0.0)).unwrap();
        assert!((far.norm() - m.k_const.norm()).abs() < 1e-6);
    }

    #[test]
    fn duplicated_points_rejected() {
        let mut pts = sample(|j| c(j, 1.0), 5);
        pts[3].0 = 1.0;
        assert!(matches!(build_rational_interpolant(&pts, 0.0, 15), Err(Error::Singular(_))));
    }

    #[test]
    fn extended_interpolation_is_tight() {
        let pts = sample(|j| c((0.3 * j).cos(), (0.7 * j).sin()) * c(1.0, 0.0) / c(1.0 + j * j * 0.01, 0.2), 21);
        let _g = PrecisionGuard::new(64);
        let mp: Vec<(f64, Complex<MpReal>)> = pts.iter().map(|&(j, s)| (j, from_c64(s))).collect();
        let m = build_interpolant::<MpReal>(&mp, 10.0).unwrap();
        let worst = m.max_fit_residual().unwrap();
        assert!(worst < 1e-30, "{worst:e}");
    }

    #[test]
    fn phase_fit_of_quadratic() {
        let ph = PhasePoly::new(0.01, 0.2, 1.0);
        let grid: Vec<f64> = (0..20).map(f64::from).collect();
        let m = PadeModel::<f64> {
            k_const: c(1.0, 0.0),
            phase: ph,
            zeros: vec![],
            poles: vec![],
            sht: 0.0,
            fit_points: vec![],
            precision_digits: 15,
        };
        let got = extract_quadratic_phase(&m, 0.5, &grid).unwrap();
        assert!((got.a - 0.01).abs() < 1e-10 && (got.b - 0.2).abs() < 1e-10 && (got.c - 1.0).abs() < 1e-10, "{got:?}");
        let flat = PadeModel { phase: PhasePoly::default(), ..m };
        let got = extract_quadratic_phase(&flat, 0.5, &grid).unwrap();
        assert!(got.a.abs() < 1e-12 && got.b.abs() < 1e-12 && got.c.abs() < 1e-12);
    }

    #[test]
    fn unwrap_keeps_steps_below_pi() {
        let raw = [3.0, -3.0, 3.1, -3.1];
        let u = unwrap_phases(&raw);
        for w in u.windows(2) {
            assert!((w[1] - w[0]).abs() <= std::f64::consts::PI);
        }
    }

    #[test]
    fn noise_is_deterministic() {
        let r = SMatrixRecord {
            energy: 1.0,
            s_values: vec![c(1.0, 0.0); 6],
            nread: 6,
            niter: 1,
            sht: 0.0,
            jstart: 0,
            jfin: 5,
            inv: -1,
            dxl: 0.5,
        };
        assert_eq!(inject_noise(&r, 0.0, 7), r);
        assert_eq!(inject_noise(&r, 1e-3, 7), inject_noise(&r, 1e-3, 7));
        let n = inject_noise(&r, 1e-3, 7);
        assert!(n.s_values.iter().all(|s| (s - c(1.0, 0.0)).norm() <= 1e-3 * 2f64.sqrt()));
    }
}
