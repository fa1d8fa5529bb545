//! Exactly solvable single-channel test system: an impenetrable core of
//! radius `R - d`, an attractive square well of depth `V` out to `R`, and a
//! zero-range barrier `Ω δ(r - R)`.
//!
//! Riccati functions follow the convention `ĵ_l(x) = x j_l(x)`,
//! `n̂_l(x) = -x y_l(x)`, so `ĥ±_l = n̂_l ± i ĵ_l → exp(±i(x - lπ/2))`.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::data::{format_energy_file, write_text, SMatrixRecord};
use crate::error::{Error, Result};
use crate::units::HBAR2_OVER_2U;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellModelParams {
    /// Outer radius, Å.
    pub r: f64,
    /// Well width, Å.
    pub d: f64,
    /// Well depth, meV (the potential is -V inside the well).
    pub v_well: f64,
    /// Barrier strength, meV·Å.
    pub omega_delta: f64,
    /// Reduced mass, Da.
    pub mu: f64,
}

impl ShellModelParams {
    /// Resonances fed by a bound state of the well.
    pub fn bound_example() -> Self {
        ShellModelParams {
            r: 2.045,
            d: 0.592,
            v_well: 165.0,
            omega_delta: 1.023,
            mu: 1.0,
        }
    }

    /// Resonances of metastable states behind a strong barrier.
    pub fn meta_example() -> Self {
        ShellModelParams {
            omega_delta: 66.463,
            ..Self::bound_example()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > self.d && self.d > 0.0) {
            return Err(Error::Validation(format!("need R > d > 0, got R={} d={}", self.r, self.d)));
        }
        if !(self.v_well >= 0.0) || !(self.mu > 0.0) || !self.omega_delta.is_finite() {
            return Err(Error::Validation("need V >= 0, mu > 0 and finite barrier strength".into()));
        }
        Ok(())
    }

    /// Core radius `R - d`.
    pub fn hard_radius(&self) -> f64 {
        self.r - self.d
    }

    /// Jump of the log-derivative across the barrier, Å⁻¹.
    pub fn barrier_jump(&self) -> f64 {
        self.omega_delta * self.mu / HBAR2_OVER_2U
    }

    fn k_squared(&self, energy: f64) -> f64 {
        self.mu * energy / HBAR2_OVER_2U
    }
}

/// `ĵ_l(x)` and `ĵ_l'(x)` for `l = 0..=lmax` by downward recurrence.
pub fn riccati_j(lmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let start = lmax + 30 + (1.5 * x) as usize;
    let mut f = vec![0.0; start + 2];
    f[start] = 1e-300;
    for l in (1..=start).rev() {
        f[l - 1] = (2 * l + 1) as f64 / x * f[l] - f[l + 1];
        if f[l - 1].abs() > 1e250 {
            for v in &mut f[l - 1..] {
                *v *= 1e-250;
            }
        }
    }
    let (s, c) = x.sin_cos();
    let j1 = s / x - c;
    let scale = if s.abs() >= j1.abs() { s / f[0] } else { j1 / f[1] };
    let vals: Vec<f64> = f[..=lmax].iter().map(|v| v * scale).collect();
    let ders = (0..=lmax)
        .map(|l| {
            let prev = if l == 0 { c } else { vals[l - 1] };
            prev - l as f64 * vals[l] / x
        })
        .collect();
    (vals, ders)
}

/// `n̂_l(x)` and `n̂_l'(x)` for `l = 0..=lmax` by upward recurrence.
pub fn riccati_n(lmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let (s, c) = x.sin_cos();
    let mut vals = Vec::with_capacity(lmax + 1);
    let mut prev = -s;
    let mut cur = c;
    vals.push(cur);
    for l in 0..lmax {
        let next = (2 * l + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
        vals.push(cur);
    }
    let ders = (0..=lmax)
        .map(|l| {
            let p = if l == 0 { -s } else { vals[l - 1] };
            p - l as f64 * vals[l] / x
        })
        .collect();
    (vals, ders)
}

/// `S(E, J)` for `J = 0..=jmax` at a positive energy.
pub fn s_matrix_row(params: &ShellModelParams, energy: f64, jmax: usize) -> Result<Vec<Complex64>> {
    params.validate()?;
    if !(energy > 0.0) {
        return Err(Error::Validation(format!("energy must be positive, got {energy}")));
    }
    let a = params.hard_radius();
    let q = params.k_squared(energy + params.v_well).sqrt();
    let k = params.k_squared(energy).sqrt();
    let g = params.barrier_jump();

    let (ja, _) = riccati_j(jmax, q * a);
    let (na, _) = riccati_n(jmax, q * a);
    let (jr, djr) = riccati_j(jmax, q * params.r);
    let (nr, dnr) = riccati_n(jmax, q * params.r);
    let (jk, djk) = riccati_j(jmax, k * params.r);
    let (nk, dnk) = riccati_n(jmax, k * params.r);

    let mut out = Vec::with_capacity(jmax + 1);
    for l in 0..=jmax {
        let vals = [ja[l], na[l], jr[l], nr[l], jk[l], nk[l], djk[l], dnk[l]];
        if vals.iter().any(|v| !v.is_finite()) || jk[l] == 0.0 || ja[l] == 0.0 {
            return Err(Error::Validation(format!(
                "Riccati functions out of range at J = {l}, E = {energy} meV; reduce j_max"
            )));
        }
        // Interior solution vanishing at the core.
        let u = jr[l] * na[l] - nr[l] * ja[l];
        let du = q * (djr[l] * na[l] - dnr[l] * ja[l]);
        let hp = Complex64::new(nk[l], jk[l]);
        let dhp = Complex64::new(dnk[l], djk[l]) * k;
        let w = du + g * u;
        // S − 1 from the ĵ part alone keeps the tail accurate where S ≈ 1.
        let den = dhp * u - hp * w;
        let diff = Complex64::new(0.0, -2.0) * (k * djk[l] * u - jk[l] * w);
        out.push(Complex64::new(1.0, 0.0) + diff / den);
    }
    Ok(out)
}

pub fn s_matrix_element(params: &ShellModelParams, energy: f64, j: usize) -> Result<Complex64> {
    Ok(s_matrix_row(params, energy, j)?[j])
}

/// Reconstruction header written into generated energy files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PadeHeader {
    pub niter: usize,
    pub sht: f64,
    pub jstart: usize,
    /// When absent, the last `J` with `|S - 1|` above `tail_floor`.
    pub jfin: Option<usize>,
    pub dxl: f64,
    pub tail_floor: f64,
}

impl Default for PadeHeader {
    fn default() -> Self {
        PadeHeader {
            niter: 2,
            sht: 15.0,
            jstart: 0,
            jfin: None,
            dxl: 0.5,
            tail_floor: 1e-8,
        }
    }
}

pub fn generate_records(params: &ShellModelParams, energies: &[f64], j_max: usize, header: &PadeHeader) -> Result<Vec<SMatrixRecord>> {
    if energies.is_empty() {
        return Err(Error::Validation("no energies requested".into()));
    }
    if energies.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("energies must be strictly increasing".into()));
    }
    if j_max < 4 {
        return Err(Error::Validation(format!("j_max must be at least 4, got {j_max}")));
    }
    energies
        .iter()
        .map(|&e| {
            let s_values = s_matrix_row(params, e, j_max)?;
            let jfin = header.jfin.unwrap_or_else(|| fit_window_end(&s_values, header.jstart, header.tail_floor));
            let record = SMatrixRecord {
                energy: e,
                s_values,
                nread: j_max + 1,
                niter: header.niter,
                sht: header.sht,
                jstart: header.jstart,
                jfin,
                inv: -1,
                dxl: header.dxl,
            };
            record.validate()?;
            Ok(record)
        })
        .collect()
}

/// Last index whose `|S - 1|` exceeds `floor`, keeping at least
/// [`MIN_FIT_POINTS`] points after `jstart`. Beyond it the data carry no
/// information a rational interpolant can use.
pub fn fit_window_end(s_values: &[Complex64], jstart: usize, floor: f64) -> usize {
    let last = s_values.len() - 1;
    let lowest = (jstart + MIN_FIT_POINTS - 1).min(last);
    (lowest..=last).rev().find(|&j| (s_values[j] - 1.0).norm() > floor).unwrap_or(lowest)
}

pub const MIN_FIT_POINTS: usize = 7;

/// Writes files `1`..`N` into `dir`.
pub fn generate_dataset(
    params: &ShellModelParams,
    energies: &[f64],
    j_max: usize,
    header: &PadeHeader,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let records = generate_records(params, energies, j_max, header)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let path = dir.join((i + 1).to_string());
            write_text(&path, &format_energy_file(r))?;
            Ok(path)
        })
        .collect()
}

/// Evenly spaced grid from `lo` to `hi` inclusive.
pub fn energy_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

// ---------------------------------------------------------------------------
// Complex angular momentum
// ---------------------------------------------------------------------------

const RK_STEP: f64 = 0.002;
const INTERIOR_STEPS: usize = 2000;

fn rk4(
    mut y: [Complex64; 2],
    from: f64,
    to: f64,
    steps: usize,
    rhs: impl Fn(f64, &[Complex64; 2]) -> [Complex64; 2],
) -> [Complex64; 2] {
    let h = (to - from) / steps as f64;
    let mut x = from;
    for _ in 0..steps {
        let k1 = rhs(x, &y);
        let y2 = [y[0] + k1[0] * (h / 2.0), y[1] + k1[1] * (h / 2.0)];
        let k2 = rhs(x + h / 2.0, &y2);
        let y3 = [y[0] + k2[0] * (h / 2.0), y[1] + k2[1] * (h / 2.0)];
        let k3 = rhs(x + h / 2.0, &y3);
        let y4 = [y[0] + k3[0] * h, y[1] + k3[1] * h];
        let k4 = rhs(x + h, &y4);
        for i in 0..2 {
            y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
        x += h;
    }
    y
}

/// Outgoing Riccati-Hankel function `ĥ⁺_ν(x)` and its derivative for
/// complex order, from the asymptotic expansion at large `x`.
fn hankel_asymptotic(nu: Complex64, x: f64) -> Option<(Complex64, Complex64)> {
    let lam = nu * (nu + 1.0);
    let i = Complex64::i();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut dsum = Complex64::new(0.0, 0.0);
    let mut last = f64::INFINITY;
    for m in 1..200 {
        let mf = m as f64;
        term = term * i * (lam - mf * (mf - 1.0)) / (2.0 * mf * x);
        let size = term.norm();
        if size > last {
            break;
        }
        sum += term;
        dsum -= term * (mf / x);
        last = size;
        if size < 1e-18 * sum.norm() {
            break;
        }
    }
    if last > 1e-14 * sum.norm() {
        return None;
    }
    let phase = (i * (Complex64::new(x, 0.0) - nu * std::f64::consts::FRAC_PI_2)).exp();
    Some((phase * sum, phase * (i * sum + dsum)))
}

/// `ĥ⁺_ν(x)` and its derivative at complex order by inward integration of
/// the Riccati equation from the asymptotic region.
pub fn outgoing_hankel(nu: Complex64, x: f64) -> Result<(Complex64, Complex64)> {
    let x_max = 60.0 + nu.norm_sqr();
    let (h, dh) = hankel_asymptotic(nu, x_max)
        .ok_or_else(|| Error::Validation(format!("asymptotic series does not converge for order {nu}")))?;
    let lam = nu * (nu + 1.0);
    let steps = ((x_max - x) / RK_STEP).ceil() as usize;
    let y = rk4([h, dh], x_max, x, steps, |t, y| [y[1], (lam / (t * t) - 1.0) * y[0]]);
    Ok((y[0], y[1]))
}

/// Normalised S-matrix denominator at complex `J` (zero at a Regge pole).
pub fn pole_determinant(params: &ShellModelParams, energy: f64, nu: Complex64) -> Result<Complex64> {
    params.validate()?;
    let a = params.hard_radius();
    let q2 = params.k_squared(energy + params.v_well);
    let k = params.k_squared(energy).sqrt();
    let g = params.barrier_jump();
    let lam = nu * (nu + 1.0);
    let inner = rk4(
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        a,
        params.r,
        INTERIOR_STEPS,
        |r, y| [y[1], (lam / (r * r) - q2) * y[0]],
    );
    let (u, du) = (inner[0], inner[1]);
    let (h, dh) = outgoing_hankel(nu, k * params.r)?;
    let w = du + u * g;
    let d = u * dh * k - w * h;
    let scale = u.norm() * k * dh.norm() + w.norm() * h.norm();
    Ok(d / scale)
}

fn in_first_quadrant(z: Complex64) -> bool {
    z.re > 0.0 && z.im > 0.0
}

/// Regge pole near `guess` by a damped secant search on
/// [`pole_determinant`], confined to the first quadrant.
pub fn complex_j_pole_oracle(params: &ShellModelParams, energy: f64, guess: Complex64) -> Result<Complex64> {
    const MAX_ITER: usize = 200;
    const MAX_STEP: f64 = 0.5;
    if !in_first_quadrant(guess) {
        return Err(Error::Validation(format!("seed {guess} is not in the first quadrant")));
    }
    let f = |z: Complex64| pole_determinant(params, energy, z);
    let mut z0 = guess;
    let mut f0 = f(z0)?;
    let mut z1 = guess + Complex64::new(1e-4, 1e-4 * guess.im.max(1e-3));
    if !in_first_quadrant(z1) {
        z1 = guess * 1.0001;
    }
    let mut f1 = f(z1)?;
    for _ in 0..MAX_ITER {
        let denom = f1 - f0;
        if denom.norm() == 0.0 {
            break;
        }
        let mut step = -f1 * (z1 - z0) / denom;
        if step.norm() > MAX_STEP {
            step *= MAX_STEP / step.norm();
        }
        let mut z2 = z1 + step;
        let mut halvings = 0;
        while !in_first_quadrant(z2) {
            step *= 0.5;
            z2 = z1 + step;
            halvings += 1;
            if halvings > 60 {
                return Err(Error::NoConvergence {
                    iterations: MAX_ITER,
                    last: z1,
                });
            }
        }
        let f2 = f(z2)?;
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = f2;
        if step.norm() <= 1e-13 * (1.0 + z1.norm()) && f1.norm() <= 1e-10 {
            return Ok(z1);
        }
        if f1.norm() <= 1e-14 {
            return Ok(z1);
        }
    }
    if f1.norm() <= 1e-10 {
        return Ok(z1);
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        last: z1,
    })
}

/// `J = 0` bound-state energies (meV, ascending) of the well: roots of
/// `q cos(qd) + (g + κ) sin(qd)` on `(-V, 0)`.
pub fn bound_state_energies(params: &ShellModelParams) -> Result<Vec<f64>> {
    params.validate()?;
    let d = params.d;
    let g = params.barrier_jump();
    let func = |e: f64| {
        let q = params.k_squared(e + params.v_well).max(0.0).sqrt();
        let kappa = params.k_squared(-e).max(0.0).sqrt();
        q * (q * d).cos() + (g + kappa) * (q * d).sin()
    };
    let n = 20_000;
    let lo = -params.v_well;
    let step = params.v_well / n as f64;
    let mut roots = Vec::new();
    let mut x0 = lo + step * 1e-3;
    let mut f0 = func(x0);
    for i in 1..n {
        let x1 = lo + step * i as f64;
        let f1 = func(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = func(m);
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
                if b - a < 1e-13 * (1.0 + m.abs()) {
                    break;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(roots)
}
