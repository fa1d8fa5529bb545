//! Dense complex kernels over [`Real`]: Householder QR with column pivoting
//! and the null vector it reveals.

use num_complex::Complex;
use num_traits::Zero;

use crate::mp::{cabs, Real};

/// Column-major complex matrix.
#[derive(Clone, Debug)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Complex<T> {
        &self.data[c * self.rows + r]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex<T>) {
        self.data[c * self.rows + r] = v;
    }

    fn col(&self, c: usize) -> &[Complex<T>] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(a * self.rows + r, b * self.rows + r);
        }
    }
}

/// Result of a pivoted QR factorisation `A P = Q R` (only `R` is kept).
#[derive(Debug)]
pub struct PivotedQr<T> {
    r: CMatrix<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Real> PivotedQr<T> {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn nullity(&self) -> usize {
        self.r.cols - self.rank
    }

    /// Magnitudes of the diagonal of `R`, in pivot order.
    pub fn diagonal(&self) -> Vec<T> {
        let n = self.r.rows.min(self.r.cols);
        (0..n).map(|k| cabs(self.r.get(k, k))).collect()
    }

    /// A unit vector `x` with `A x ~ 0`, built from the first column past
    /// the numerical rank. Returns `None` when `A` has full column rank.
    pub fn null_vector(&self) -> Option<Vec<Complex<T>>> {
        let n = self.r.cols;
        let r = self.rank;
        if r >= n {
            return None;
        }
        // Solve R11 y = -R12[:, 0] by back substitution.
        let mut y: Vec<Complex<T>> = (0..r).map(|i| -self.r.get(i, r).clone()).collect();
        for i in (0..r).rev() {
            let mut acc = y[i].clone();
            for (j, yj) in y.iter().enumerate().take(r).skip(i + 1) {
                acc = acc - self.r.get(i, j).clone() * yj.clone();
            }
            y[i] = acc / self.r.get(i, i).clone();
        }
        let mut permuted = y;
        permuted.push(Complex::new(T::one(), T::zero()));
        permuted.resize(n, Complex::zero());

        let mut x = vec![Complex::zero(); n];
        for (k, v) in permuted.into_iter().enumerate() {
            x[self.perm[k]] = v;
        }
        let norm = x
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt();
        Some(x.into_iter().map(|z| z.unscale(norm.clone())).collect())
    }
}

/// Householder QR with column pivoting. Columns whose diagonal entry falls
/// below `rtol * |R_00|` are treated as numerically dependent.
pub fn pivoted_qr<T: Real>(a: &CMatrix<T>, rtol: &T) -> PivotedQr<T> {
    let mut r = a.clone();
    let (m, n) = (r.rows, r.cols);
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    let mut first_diag: Option<T> = None;
    let mut rank = steps;

    for k in 0..steps {
        // Pivot on the largest trailing column norm.
        let mut best = k;
        let mut best_norm = T::zero();
        for j in k..n {
            let s = r.col(j)[k..]
                .iter()
                .fold(T::zero(), |acc, z| acc + z.norm_sqr());
            if s > best_norm {
                best_norm = s;
                best = j;
            }
        }
        r.swap_cols(k, best);
        perm.swap(k, best);

        let norm = best_norm.sqrt();
        let reference = first_diag.get_or_insert_with(|| norm.clone()).clone();
        if norm.is_zero() || norm <= rtol.clone() * reference {
            rank = k;
            break;
        }

        // Reflector mapping x onto alpha e1 with alpha = -phase(x0) |x|.
        let x0 = r.get(k, k).clone();
        let x0_abs = cabs(&x0);
        let phase = if x0_abs.is_zero() {
            Complex::new(T::one(), T::zero())
        } else {
            x0.unscale(x0_abs)
        };
        let alpha = -phase * norm;
        let mut v: Vec<Complex<T>> = r.col(k)[k..].to_vec();
        v[0] = v[0].clone() - alpha.clone();
        let vnorm2 = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if !vnorm2.is_zero() {
            let two = T::from_f64(2.0);
            for j in k..n {
                let dot = v
                    .iter()
                    .enumerate()
                    .fold(Complex::zero(), |acc: Complex<T>, (i, vi)| {
                        acc + vi.conj() * r.get(k + i, j).clone()
                    });
                let f = dot.scale(two.clone() / vnorm2.clone());
                for (i, vi) in v.iter().enumerate() {
                    let cur = r.get(k + i, j).clone();
                    r.set(k + i, j, cur - vi.clone() * f.clone());
                }
            }
        }
        r.set(k, k, alpha);
        for i in k + 1..m {
            r.set(i, k, Complex::zero());
        }
    }

    PivotedQr { r, perm, rank }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn residual(a: &CMatrix<f64>, x: &[Complex64]) -> f64 {
        (0..a.rows())
            .map(|i| {
                (0..a.cols())
                    .map(|j| a.get(i, j) * x[j])
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn null_vector_of_wide_matrix() {
        let mut a = CMatrix::zeros(2, 3);
        let rows = [[c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0)], [c(0.5, 0.5), c(-1.0, 0.0), c(3.0, 0.0)]];
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                a.set(i, j, *v);
            }
        }
        let qr = pivoted_qr(&a, &1e-13);
        assert_eq!(qr.rank(), 2);
        let x = qr.null_vector().unwrap();
        assert!(residual(&a, &x) < 1e-14);
    }

    #[test]
    fn detects_rank_deficiency() {
        // Third column is the sum of the first two.
        let mut a = CMatrix::zeros(4, 3);
        for i in 0..4 {
            let u = c(i as f64, 1.0);
            let v = c(1.0, -(i as f64) * 0.5);
            a.set(i, 0, u);
            a.set(i, 1, v);
            a.set(i, 2, u + v);
        }
        let qr = pivoted_qr(&a, &1e-12);
        assert_eq!(qr.rank(), 2);
        assert_eq!(qr.nullity(), 1);
        let x = qr.null_vector().unwrap();
        assert!(residual(&a, &x) < 1e-13);
    }
}
