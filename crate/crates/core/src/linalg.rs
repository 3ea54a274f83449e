//! Small dense 2×2 helpers and a banded LU solver for the implicit steps.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<f64>;
pub type Vec2 = Vector2<f64>;

/// Symmetric part `(M + Mᵀ)/2`.
pub fn sym_part(m: &Mat2) -> Mat2 {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric 2×2 matrix and a unit eigenvector.
///
/// The small eigenvalue is recovered as `det / λ_max` when that avoids
/// cancellation, which matters for the large, nearly singular matrices met
/// close to the vertices of the triangle.
pub fn min_eig_sym(m: &Mat2) -> (f64, Vec2) {
    let a = m[(0, 0)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let d = m[(1, 1)];
    let half_tr = 0.5 * (a + d);
    let rad = (0.5 * (a - d)).hypot(b);
    let det = a * d - b * b;
    let lmin = if half_tr > 0.0 {
        let lmax = half_tr + rad;
        if lmax > 0.0 {
            det / lmax
        } else {
            half_tr - rad
        }
    } else {
        half_tr - rad
    };
    // eigenvector of the smaller eigenvalue
    let v = if b == 0.0 {
        if a <= d {
            Vec2::new(1.0, 0.0)
        } else {
            Vec2::new(0.0, 1.0)
        }
    } else {
        // (A - λ I) v = 0 using the better-conditioned row
        let v1 = Vec2::new(b, lmin - a);
        let v2 = Vec2::new(lmin - d, b);
        if v1.norm() >= v2.norm() {
            v1
        } else {
            v2
        }
    };
    let n = v.norm();
    (lmin, if n > 0.0 { v / n } else { Vec2::new(1.0, 0.0) })
}

/// Positive semidefiniteness of the symmetric part via Sylvester's criterion
/// (all principal minors nonnegative). `tol` is an absolute slack on each minor.
pub fn is_psd(m: &Mat2, tol: f64) -> bool {
    let s = sym_part(m);
    s[(0, 0)] >= -tol && s[(1, 1)] >= -tol && s.determinant() >= -tol
}

/// Quadratic form `zᵀ M z`.
pub fn quad_form(m: &Mat2, z: &Vec2) -> f64 {
    z.dot(&(m * z))
}

/// Largest absolute entry.
pub fn max_abs(m: &Mat2) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals, stored with
/// `kl` extra super-diagonals of room for pivoting fill-in.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            return 0.0;
        }
        self.data[self.idx(i, j)]
    }

    /// Adds `v` at `(i, j)`; `j` must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band"
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Adds a 2×2 block whose top-left entry sits at `(2*bi, 2*bj)`.
    pub fn add_block(&mut self, bi: usize, bj: usize, block: &Mat2) {
        for r in 0..2 {
            for c in 0..2 {
                self.add(2 * bi + r, 2 * bj + c, block[(r, c)]);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    /// Consumes the matrix (it is overwritten by the factors).
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut rhs = b.to_vec();
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tiny = f64::MIN_POSITIVE.max(scale * 1e-300);
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularSystem(k));
            }
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
                rhs.swap(k, p);
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                if l == 0.0 {
                    continue;
                }
                self.data[ik] = 0.0;
                for j in k + 1..=last_col {
                    let (ij, kj) = (self.idx(i, j), self.idx(k, j));
                    self.data[ij] -= l * self.data[kj];
                }
                rhs[i] -= l * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let last_col = (i + self.kl + self.ku).min(n - 1);
            let mut s = rhs[i];
            for j in i + 1..=last_col {
                s -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.data[self.idx(i, i)];
        }
        Ok(x)
    }
}

/// Sum with Neumaier compensation; fixed order, so results are reproducible.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
