//! Polynomial roots: companion-matrix eigenvalues in double precision,
//! then simultaneous Newton (Aberth) refinement at the caller's precision.

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};

use crate::mp::{cabs, from_c64, to_c64, Real};

const MAX_POLISH_SWEEPS: usize = 200;

/// Evaluates `p(z)` and `p'(z)` for ascending coefficients.
pub fn horner_with_derivative<T: Real>(coeffs: &[Complex<T>], z: &Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::zero();
    let mut dp = Complex::zero();
    for c in coeffs.iter().rev() {
        dp = dp * z.clone() + p.clone();
        p = p * z.clone() + c.clone();
    }
    (p, dp)
}

/// Degree after dropping exactly-zero leading coefficients.
pub fn degree<T: Real>(coeffs: &[Complex<T>]) -> Option<usize> {
    coeffs.iter().rposition(|c| !c.is_zero())
}

/// All roots of the polynomial with ascending coefficients `coeffs`.
/// Exactly-zero leading coefficients are ignored.
pub fn roots<T: Real>(coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
    let Some(d) = degree(coeffs) else {
        return Vec::new();
    };
    if d == 0 {
        return Vec::new();
    }
    let coeffs = &coeffs[..=d];
    let lead = coeffs[d].clone();
    if d == 1 {
        return vec![-coeffs[0].clone() / lead];
    }

    let mut z: Vec<Complex<T>> = starting_points(coeffs).into_iter().map(from_c64).collect();
    polish(coeffs, &mut z);
    z
}

/// Double-precision guesses. Leading coefficients far below the rest
/// (relative `GAP`) belong to very large roots; those get a circle at the
/// modulus the gap implies, the rest come from the companion matrix.
fn starting_points<T: Real>(coeffs: &[Complex<T>]) -> Vec<Complex64> {
    const GAP: f64 = 1e-30;
    let d = coeffs.len() - 1;
    let big = coeffs.iter().map(|c| cabs(c).to_f64()).fold(0.0, f64::max);
    let dg = coeffs.iter().rposition(|c| cabs(c).to_f64() > GAP * big).unwrap_or(d);
    let mut guesses = Vec::with_capacity(d);
    if dg >= 1 {
        let lead = coeffs[dg].clone();
        let monic: Vec<Complex64> = coeffs[..=dg].iter().map(|c| to_c64(&(c.clone() / lead.clone()))).collect();
        guesses.extend(companion_eigenvalues(&monic).unwrap_or_else(|| circle_guesses(&monic)));
    }
    if dg < d {
        let ratio = cabs(&coeffs[dg]).to_f64() / cabs(&coeffs[d]).to_f64();
        let radius = ratio.powf(1.0 / (d - dg) as f64).min(1e300);
        let n = d - dg;
        guesses.extend((0..n).map(|k| {
            Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4)
        }));
    }
    guesses
}

fn companion_eigenvalues(monic: &[Complex64]) -> Option<Vec<Complex64>> {
    let d = monic.len() - 1;
    if monic.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return None;
    }
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = Complex64::one();
    }
    for i in 0..d {
        m[(i, d - 1)] = -monic[i];
    }
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-15, 10_000)?;
    let ev = schur.eigenvalues()?;
    let ev: Vec<Complex64> = ev.iter().copied().collect();
    if ev.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(ev)
    } else {
        None
    }
}

/// Starting points on a circle whose radius is the geometric mean of the
/// root moduli, offset from the axes.
fn circle_guesses(monic: &[Complex64]) -> Vec<Complex64> {
    let d = monic.len() - 1;
    let c0 = monic[0].norm();
    let radius = if c0 > 0.0 && c0.is_finite() {
        c0.powf(1.0 / d as f64)
    } else {
        1.0
    };
    (0..d)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / d as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect()
}

/// Aberth-Ehrlich sweeps (Gauss-Seidel ordering) until every correction is
/// at the roundoff level of the working precision.
fn polish<T: Real>(coeffs: &[Complex<T>], z: &mut [Complex<T>]) {
    let n = z.len();
    let tol = T::epsilon() * T::from_f64(16.0);
    let tiny = T::epsilon() * T::epsilon();
    for _ in 0..MAX_POLISH_SWEEPS {
        let mut converged = true;
        for i in 0..n {
            let (p, dp) = horner_with_derivative(coeffs, &z[i]);
            if p.is_zero() {
                continue;
            }
            if cabs(&dp) <= tiny {
                converged = false;
                z[i] = z[i].clone() + Complex::new(tol.clone(), tol.clone());
                continue;
            }
            let w = p / dp;
            let mut s = Complex::zero();
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    let diff = z[i].clone() - zj.clone();
                    if !diff.is_zero() {
                        s = s + Complex::<T>::one() / diff;
                    }
                }
            }
            let denom = Complex::<T>::one() - w.clone() * s;
            let step = if cabs(&denom) <= tiny { w } else { w / denom };
            let scale = T::one() + cabs(&z[i]);
            if cabs(&step) > tol.clone() * scale {
                converged = false;
            }
            z[i] = z[i].clone() - step;
        }
        if converged {
            break;
        }
    }
}
