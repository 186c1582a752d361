//! Small dense, tridiagonal and banded linear algebra for desk-scale problems.

use crate::error::{Error, Result};

/// Solve `a x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is row-major `n x n`; both `a` and `b` are destroyed.
pub fn solve_dense(a: &mut [f64], n: usize, b: &mut [f64]) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(Error::SolverFailure(format!(
                "singular pivot in column {col}"
            )));
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[row * n + j] -= f * a[col * n + j];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for j in col + 1..n {
            s -= a[col * n + j] * b[j];
        }
        b[col] = s / a[col * n + col];
    }
    Ok(())
}

/// Inverse of a row-major `n x n` matrix.
pub fn invert_dense(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for k in 0..n {
        let mut m = a.to_vec();
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        solve_dense(&mut m, n, &mut e)?;
        for i in 0..n {
            inv[i * n + k] = e[i];
        }
    }
    Ok(inv)
}

pub fn mat_vec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Least squares `min ||A c - y||` for a skinny design matrix given by columns.
/// Normal equations; fine for the 2-4 parameter fits used here.
pub fn lstsq_columns(columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let p = columns.len();
    let m = y.len();
    debug_assert!(columns.iter().all(|c| c.len() == m));
    let mut g = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for i in 0..p {
        for j in 0..p {
            g[i * p + j] = dot(&columns[i], &columns[j]);
        }
        rhs[i] = dot(&columns[i], y);
    }
    solve_dense(&mut g, p, &mut rhs)?;
    Ok(rhs)
}

/// Precomputed Thomas factorization of the symmetric tridiagonal matrix with
/// constant diagonal `d` and off-diagonal `e` (uniform-knot spline systems).
#[derive(Debug, Clone)]
pub struct UniformTridiag {
    n: usize,
    e: f64,
    /// Modified diagonal after forward elimination.
    w: Vec<f64>,
}

impl UniformTridiag {
    pub fn new(n: usize, d: f64, e: f64) -> Self {
        let mut w = vec![0.0; n];
        if n > 0 {
            w[0] = d;
            for i in 1..n {
                w[i] = d - e * e / w[i - 1];
            }
        }
        Self { n, e, w }
    }

    /// Solve in place.
    pub fn solve(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in 1..self.n {
            let f = self.e / self.w[i - 1];
            b[i] -= f * b[i - 1];
        }
        if self.n > 0 {
            b[self.n - 1] /= self.w[self.n - 1];
            for i in (0..self.n - 1).rev() {
                b[i] = (b[i] - self.e * b[i + 1]) / self.w[i];
            }
        }
    }
}

/// Band matrix with `kl` sub- and `ku` super-diagonals stored LAPACK-style with
/// room for pivoting fill (effective upper width `kl + ku`).
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
    factored: bool,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n],
            ipiv: vec![0; n],
            factored: false,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // entry (i, j) stored at row kl + ku + i - j of column j
        (self.kl + self.ku + i - j) + j * self.ldab
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(!self.factored);
        assert!(j + self.ku >= i && i + self.kl >= j, "entry outside band");
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    /// LU factorization with partial pivoting (row interchanges stay in band).
    pub fn factor(&mut self) -> Result<()> {
        assert!(!self.factored);
        let n = self.n;
        let kl = self.kl;
        let kuw = self.ku + self.kl; // upper width after fill
        for j in 0..n {
            let imax = (j + kl).min(n - 1);
            let mut piv = j;
            let mut best = self.ab[self.idx(j, j)].abs();
            for i in j + 1..=imax {
                let v = self.ab[self.idx(i, j)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SolverFailure(format!(
                    "band LU: zero pivot at column {j}"
                )));
            }
            self.ipiv[j] = piv;
            let jend = (j + kuw).min(n - 1);
            if piv != j {
                for col in j..=jend {
                    let a = self.idx(j, col);
                    let b = self.idx(piv, col);
                    self.ab.swap(a, b);
                }
            }
            let d = self.ab[self.idx(j, j)];
            for i in j + 1..=imax {
                let k = self.idx(i, j);
                let f = self.ab[k] / d;
                self.ab[k] = f;
                if f != 0.0 {
                    for col in j + 1..=jend {
                        let t = self.ab[self.idx(j, col)];
                        if t != 0.0 {
                            let k2 = self.idx(i, col);
                            self.ab[k2] -= f * t;
                        }
                    }
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solve with the computed factorization.
    pub fn solve(&self, b: &mut [f64]) {
        assert!(self.factored);
        let n = self.n;
        let kl = self.kl;
        let kuw = self.ku + self.kl;
        for j in 0..n {
            let piv = self.ipiv[j];
            if piv != j {
                b.swap(j, piv);
            }
            let imax = (j + kl).min(n - 1);
            for i in j + 1..=imax {
                b[i] -= self.ab[self.idx(i, j)] * b[j];
            }
        }
        for j in (0..n).rev() {
            let jend = (j + kuw).min(n - 1);
            let mut s = b[j];
            for col in j + 1..=jend {
                s -= self.ab[self.idx(j, col)] * b[col];
            }
            b[j] = s / self.ab[self.idx(j, j)];
        }
    }
}

/// Minimal complex arithmetic for superpotential and determinant work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };
    pub const ONE: Complex = Complex { re: 1.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }

    pub fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }

    pub fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    pub fn scale(self, s: f64) -> Complex {
        Complex::new(self.re * s, self.im * s)
    }

    pub fn inv(self) -> Complex {
        let d = self.re * self.re + self.im * self.im;
        Complex::new(self.re / d, -self.im / d)
    }

    pub fn powi(self, k: i64) -> Complex {
        if k == 0 {
            return Complex::ONE;
        }
        let base = if k < 0 { self.inv() } else { self };
        let mut acc = Complex::ONE;
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(base);
        }
        acc
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
}
