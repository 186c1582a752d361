//! Scalar fields on `N_R` with exact value / gradient / Hessian evaluation.
//!
//! A field is a finite sum of terms plus an affine part. The term kinds cover
//! everything the lab needs: shifted log-sum-exp lattice sums (potentials and
//! reference metrics), C^2 spline grids (solver output and sampled data),
//! exponential and polynomial probes, and compactly supported bumps.

use crate::error::{Error, Result};
use crate::linalg::UniformTridiag;

/// `0.5 * log sum_u w_u exp(2 <u, xi>)` over a finite lattice support.
#[derive(Debug, Clone)]
pub struct LogLatticeSum {
    dim: usize,
    points: Vec<Vec<i64>>,
    log_weights: Vec<f64>,
}

impl LogLatticeSum {
    pub fn new(dim: usize, points: Vec<Vec<i64>>, weights: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty lattice support".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidInput("weight count mismatch".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidInput("lattice point dimension mismatch".into()));
        }
        if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        Ok(Self {
            dim,
            points,
            log_weights: weights.iter().map(|w| w.ln()).collect(),
        })
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    /// Max-shifted evaluation: value, weighted mean of the support points and
    /// their weighted covariance. Gradient is the mean, Hessian twice the
    /// covariance.
    pub fn parts(&self, xi: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.dim;
        let mut exponents = Vec::with_capacity(self.points.len());
        let mut amax = f64::NEG_INFINITY;
        for (u, lw) in self.points.iter().zip(&self.log_weights) {
            let mut a = *lw;
            for j in 0..n {
                a += 2.0 * u[j] as f64 * xi[j];
            }
            exponents.push(a);
            if a > amax {
                amax = a;
            }
        }
        let mut s = 0.0;
        let mut probs = Vec::with_capacity(exponents.len());
        for &a in &exponents {
            let e = (a - amax).exp();
            probs.push(e);
            s += e;
        }
        for p in probs.iter_mut() {
            *p /= s;
        }
        let value = 0.5 * (amax + s.ln());
        let mut mean = vec![0.0; n];
        for (u, &p) in self.points.iter().zip(&probs) {
            for j in 0..n {
                mean[j] += p * u[j] as f64;
            }
        }
        let mut cov = vec![0.0; n * n];
        for (u, &p) in self.points.iter().zip(&probs) {
            for j in 0..n {
                let dj = u[j] as f64 - mean[j];
                for k in 0..n {
                    let dk = u[k] as f64 - mean[k];
                    cov[j * n + k] += p * dj * dk;
                }
            }
        }
        (value, mean, cov)
    }
}

/// Uniform-knot natural cubic spline data for one axis.
#[derive(Debug, Clone)]
struct Spline1 {
    x0: f64,
    h: f64,
    n: usize,
}

impl Spline1 {
    fn second_derivs(&self, y: &[f64], tri: &UniformTridiag) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n];
        if n > 2 {
            let mut rhs = vec![0.0; n - 2];
            for i in 1..n - 1 {
                rhs[i - 1] = 6.0 * (y[i - 1] - 2.0 * y[i] + y[i + 1]) / (self.h * self.h);
            }
            tri.solve(&mut rhs);
            m[1..n - 1].copy_from_slice(&rhs);
        }
        m
    }

    fn locate(&self, x: f64) -> Result<usize> {
        let t = (x - self.x0) / self.h;
        if t < -1e-9 || t > (self.n - 1) as f64 + 1e-9 {
            return Err(Error::OutsideGridBox(format!(
                "coordinate {} outside [{}, {}]",
                x,
                self.x0,
                self.x0 + self.h * (self.n - 1) as f64
            )));
        }
        Ok((t.floor() as isize).clamp(0, self.n as isize - 2) as usize)
    }

    /// Value and first two derivatives at `x` for knot data `y`, `m`.
    fn eval(&self, y: &[f64], m: &[f64], x: f64) -> Result<(f64, f64, f64)> {
        let i = self.locate(x)?;
        let xi = self.x0 + self.h * i as f64;
        let a = (xi + self.h - x) / self.h;
        let b = (x - xi) / self.h;
        let h2 = self.h * self.h;
        let v = a * y[i]
            + b * y[i + 1]
            + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h2 / 6.0;
        let d = (y[i + 1] - y[i]) / self.h
            + self.h / 6.0 * ((3.0 * b * b - 1.0) * m[i + 1] - (3.0 * a * a - 1.0) * m[i]);
        let dd = a * m[i] + b * m[i + 1];
        Ok((v, d, dd))
    }
}

/// Samples on a box `[-T, T]^n` (n <= 2) with C^2 natural-spline interpolation.
/// Queries outside the box are an error, not extrapolation.
#[derive(Debug, Clone)]
pub struct GridField {
    dim: usize,
    box_half: f64,
    res: Vec<usize>,
    values: Vec<f64>,
    axis: Vec<Spline1>,
    tri: Vec<UniformTridiag>,
    /// 2D: per-row second derivatives along the last axis; 1D: the spline M.
    row_m: Vec<Vec<f64>>,
}

impl GridField {
    pub fn new(dim: usize, box_half: f64, res: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::Unsupported(format!(
                "grid fields support dimensions 1 and 2, got {dim}"
            )));
        }
        if res.len() != dim || res.iter().any(|&r| r < 4) {
            return Err(Error::InvalidInput(
                "grid needs at least 4 knots per axis".into(),
            ));
        }
        if !box_half.is_finite() || box_half <= 0.0 {
            return Err(Error::InvalidInput("grid box must be positive".into()));
        }
        let expected: usize = res.iter().product();
        if values.len() != expected {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                expected,
                values.len()
            )));
        }
        let axis: Vec<Spline1> = res
            .iter()
            .map(|&r| Spline1 {
                x0: -box_half,
                h: 2.0 * box_half / (r - 1) as f64,
                n: r,
            })
            .collect();
        let tri: Vec<UniformTridiag> = res
            .iter()
            .map(|&r| UniformTridiag::new(r - 2, 4.0, 1.0))
            .collect();
        let row_m = match dim {
            1 => vec![axis[0].second_derivs(&values, &tri[0])],
            _ => {
                let (n1, n2) = (res[0], res[1]);
                (0..n1)
                    .map(|ix| {
                        let row = &values[ix * n2..(ix + 1) * n2];
                        axis[1].second_derivs(row, &tri[1])
                    })
                    .collect()
            }
        };
        Ok(Self {
            dim,
            box_half,
            res,
            values,
            axis,
            tri,
            row_m,
        })
    }

    pub fn sample(
        dim: usize,
        box_half: f64,
        res: Vec<usize>,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(res.iter().product());
        match dim {
            1 => {
                let h = 2.0 * box_half / (res[0] - 1) as f64;
                for i in 0..res[0] {
                    values.push(f(&[-box_half + h * i as f64]));
                }
            }
            2 => {
                let h1 = 2.0 * box_half / (res[0] - 1) as f64;
                let h2 = 2.0 * box_half / (res[1] - 1) as f64;
                for i in 0..res[0] {
                    for j in 0..res[1] {
                        values.push(f(&[-box_half + h1 * i as f64, -box_half + h2 * j as f64]));
                    }
                }
            }
            _ => return Err(Error::Unsupported("grid sample dimension".into())),
        }
        Self::new(dim, box_half, res, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn box_half(&self) -> f64 {
        self.box_half
    }

    pub fn res(&self) -> &[usize] {
        &self.res
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.iter().all(|&x| x.abs() <= self.box_half + 1e-9)
    }

    /// Value, gradient and Hessian (row-major) of the interpolant.
    pub fn eval(&self, xi: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        match self.dim {
            1 => {
                let (v, d, dd) = self.axis[0].eval(&self.values, &self.row_m[0], xi[0])?;
                Ok((v, vec![d], vec![dd]))
            }
            _ => self.eval2(xi),
        }
    }

    fn eval2(&self, xi: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let (n1, n2) = (self.res[0], self.res[1]);
        let (p, q) = (xi[0], xi[1]);
        // bounds check up front so partial work never escapes the box
        self.axis[0].locate(p)?;
        self.axis[1].locate(q)?;
        let mut s = vec![0.0; n1];
        let mut sq = vec![0.0; n1];
        let mut sqq = vec![0.0; n1];
        for ix in 0..n1 {
            let row = &self.values[ix * n2..(ix + 1) * n2];
            let (v, d, dd) = self.axis[1].eval(row, &self.row_m[ix], q)?;
            s[ix] = v;
            sq[ix] = d;
            sqq[ix] = dd;
        }
        let ms = self.axis[0].second_derivs(&s, &self.tri[0]);
        let mq = self.axis[0].second_derivs(&sq, &self.tri[0]);
        let mqq = self.axis[0].second_derivs(&sqq, &self.tri[0]);
        let (v, vp, vpp) = self.axis[0].eval(&s, &ms, p)?;
        let (vq, vpq, _) = self.axis[0].eval(&sq, &mq, p)?;
        let (vqq, _, _) = self.axis[0].eval(&sqq, &mqq, p)?;
        Ok((
            v,
            vec![vp, vq],
            vec![vpp, vpq, vpq, vqq],
        ))
    }
}

/// One monomial `coeff * prod_j xi_j^{powers_j}`.
#[derive(Debug, Clone)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    fn eval(&self, xi: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = xi.len();
        let pow = |x: f64, p: u32| -> f64 { x.powi(p as i32) };
        let mut value = self.coeff;
        for j in 0..n {
            value *= pow(xi[j], self.powers[j]);
        }
        let part = |skip: usize| -> f64 {
            let mut v = self.coeff;
            for j in 0..n {
                if j != skip {
                    v *= pow(xi[j], self.powers[j]);
                }
            }
            v
        };
        let mut grad = vec![0.0; n];
        for j in 0..n {
            let p = self.powers[j];
            if p > 0 {
                grad[j] = part(j) * p as f64 * pow(xi[j], p - 1);
            }
        }
        let mut hess = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                let (pj, pk) = (self.powers[j], self.powers[k]);
                if j == k {
                    if pj >= 2 {
                        hess[j * n + k] =
                            part(j) * (pj * (pj - 1)) as f64 * pow(xi[j], pj - 2);
                    }
                } else if pj > 0 && pk > 0 {
                    let mut v = self.coeff * (pj * pk) as f64;
                    for l in 0..n {
                        let pl = self.powers[l];
                        let e = if l == j || l == k { pl - 1 } else { pl };
                        v *= pow(xi[l], e);
                    }
                    hess[j * n + k] = v;
                }
            }
        }
        (value, grad, hess)
    }
}

#[derive(Debug, Clone)]
pub enum Term {
    /// `coeff * LogLatticeSum`
    LogSum { coeff: f64, sum: LogLatticeSum },
    /// `coeff * interpolated grid`
    Grid { coeff: f64, grid: GridField },
    /// `coeff * exp(2 <direction, xi>)`
    Exp { coeff: f64, direction: Vec<f64> },
    /// polynomial in the coordinates
    Poly { monomials: Vec<Monomial> },
    /// `amplitude * (1 - |xi - center|^2 / radius^2)^3`, zero outside
    Bump {
        amplitude: f64,
        center: Vec<f64>,
        radius: f64,
    },
}

/// A scalar field: sum of terms plus an affine part `<lin, xi> + constant`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    dim: usize,
    terms: Vec<Term>,
    affine_lin: Vec<f64>,
    affine_const: f64,
}

impl ScalarField {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
            affine_lin: vec![0.0; dim],
            affine_const: 0.0,
        }
    }

    pub fn affine(lin: Vec<f64>, constant: f64) -> Self {
        Self {
            dim: lin.len(),
            terms: Vec::new(),
            affine_lin: lin,
            affine_const: constant,
        }
    }

    pub fn from_terms(dim: usize, terms: Vec<Term>) -> Self {
        Self {
            dim,
            terms,
            affine_lin: vec![0.0; dim],
            affine_const: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn affine_lin(&self) -> &[f64] {
        &self.affine_lin
    }

    pub fn affine_const(&self) -> f64 {
        self.affine_const
    }

    pub fn push_term(&mut self, term: Term) {
        self.terms.push(term);
    }

    pub fn add_affine(&mut self, lin: &[f64], constant: f64) {
        for j in 0..self.dim {
            self.affine_lin[j] += lin[j];
        }
        self.affine_const += constant;
    }

    /// Field addition by term concatenation (exact).
    pub fn add(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.dim, other.dim);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        let lin = self
            .affine_lin
            .iter()
            .zip(&other.affine_lin)
            .map(|(a, b)| a + b)
            .collect();
        ScalarField {
            dim: self.dim,
            terms,
            affine_lin: lin,
            affine_const: self.affine_const + other.affine_const,
        }
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                Term::LogSum { coeff, sum } => Term::LogSum {
                    coeff: coeff * c,
                    sum: sum.clone(),
                },
                Term::Grid { coeff, grid } => Term::Grid {
                    coeff: coeff * c,
                    grid: grid.clone(),
                },
                Term::Exp { coeff, direction } => Term::Exp {
                    coeff: coeff * c,
                    direction: direction.clone(),
                },
                Term::Poly { monomials } => Term::Poly {
                    monomials: monomials
                        .iter()
                        .map(|m| Monomial {
                            coeff: m.coeff * c,
                            powers: m.powers.clone(),
                        })
                        .collect(),
                },
                Term::Bump {
                    amplitude,
                    center,
                    radius,
                } => Term::Bump {
                    amplitude: amplitude * c,
                    center: center.clone(),
                    radius: *radius,
                },
            })
            .collect();
        ScalarField {
            dim: self.dim,
            terms,
            affine_lin: self.affine_lin.iter().map(|a| a * c).collect(),
            affine_const: self.affine_const * c,
        }
    }

    pub fn negate(&self) -> ScalarField {
        self.scale(-1.0)
    }

    /// Whether every term is evaluable at `xi` (grid boxes are the only
    /// bounded domains).
    pub fn contains(&self, xi: &[f64]) -> bool {
        self.terms.iter().all(|t| match t {
            Term::Grid { grid, .. } => grid.contains(xi),
            _ => true,
        })
    }

    /// Value, gradient and Hessian (row-major `n x n`).
    pub fn eval(&self, xi: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let n = self.dim;
        debug_assert_eq!(xi.len(), n);
        let mut value = self.affine_const;
        let mut grad = self.affine_lin.clone();
        let mut hess = vec![0.0; n * n];
        for j in 0..n {
            value += self.affine_lin[j] * xi[j];
        }
        for term in &self.terms {
            match term {
                Term::LogSum { coeff, sum } => {
                    let (v, mean, cov) = sum.parts(xi);
                    value += coeff * v;
                    for j in 0..n {
                        grad[j] += coeff * mean[j];
                        for k in 0..n {
                            hess[j * n + k] += coeff * 2.0 * cov[j * n + k];
                        }
                    }
                }
                Term::Grid { coeff, grid } => {
                    let (v, g, h) = grid.eval(xi)?;
                    value += coeff * v;
                    for j in 0..n {
                        grad[j] += coeff * g[j];
                        for k in 0..n {
                            hess[j * n + k] += coeff * h[j * n + k];
                        }
                    }
                }
                Term::Exp { coeff, direction } => {
                    let mut e = 0.0;
                    for j in 0..n {
                        e += 2.0 * direction[j] * xi[j];
                    }
                    let v = coeff * e.exp();
                    if !v.is_finite() {
                        return Err(Error::NumericOverflow(format!(
                            "exponential term at exponent {e}"
                        )));
                    }
                    value += v;
                    for j in 0..n {
                        grad[j] += 2.0 * direction[j] * v;
                        for k in 0..n {
                            hess[j * n + k] += 4.0 * direction[j] * direction[k] * v;
                        }
                    }
                }
                Term::Poly { monomials } => {
                    for m in monomials {
                        let (v, g, h) = m.eval(xi);
                        value += v;
                        for j in 0..n {
                            grad[j] += g[j];
                            for k in 0..n {
                                hess[j * n + k] += h[j * n + k];
                            }
                        }
                    }
                }
                Term::Bump {
                    amplitude,
                    center,
                    radius,
                } => {
                    let r2 = radius * radius;
                    let mut s = 0.0;
                    for j in 0..n {
                        let d = xi[j] - center[j];
                        s += d * d;
                    }
                    s /= r2;
                    if s < 1.0 {
                        let q = 1.0 - s;
                        value += amplitude * q * q * q;
                        for j in 0..n {
                            let dj = xi[j] - center[j];
                            grad[j] += -6.0 * amplitude * q * q * dj / r2;
                            for k in 0..n {
                                let dk = xi[k] - center[k];
                                let mut h = -4.0 * q * dj * dk / r2;
                                if j == k {
                                    h += q * q;
                                }
                                hess[j * n + k] += -6.0 * amplitude * h / r2;
                            }
                        }
                    }
                }
            }
        }
        if !value.is_finite() {
            return Err(Error::NumericOverflow("field value is not finite".into()));
        }
        Ok((value, grad, hess))
    }

    pub fn value(&self, xi: &[f64]) -> Result<f64> {
        Ok(self.eval(xi)?.0)
    }

    pub fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(xi)?.1)
    }

    pub fn hessian(&self, xi: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(xi)?.2)
    }

    /// `<grad g, v>` for a ray direction.
    pub fn grad_pair(&self, xi: &[f64], v: &[f64]) -> Result<f64> {
        let g = self.gradient(xi)?;
        Ok(g.iter().zip(v).map(|(a, b)| a * b).sum())
    }

    /// `v^T Hess(g) w`.
    pub fn hess_quad(&self, xi: &[f64], v: &[f64], w: &[f64]) -> Result<f64> {
        let n = self.dim;
        let h = self.hessian(xi)?;
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                s += v[j] * h[j * n + k] * w[k];
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fd_check(field: &ScalarField, xi: &[f64], tol: f64) {
        let n = field.dim();
        let h = 1e-4;
        let (_, grad, hess) = field.eval(xi).unwrap();
        for j in 0..n {
            let mut xp = xi.to_vec();
            let mut xm = xi.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let d = (field.value(&xp).unwrap() - field.value(&xm).unwrap()) / (2.0 * h);
            assert!(
                (d - grad[j]).abs() < tol,
                "grad[{j}] fd {d} vs {}",
                grad[j]
            );
            let gp = field.gradient(&xp).unwrap();
            let gm = field.gradient(&xm).unwrap();
            for k in 0..n {
                let dd = (gp[k] - gm[k]) / (2.0 * h);
                assert!(
                    (dd - hess[j * n + k]).abs() < tol,
                    "hess[{j},{k}] fd {dd} vs {}",
                    hess[j * n + k]
                );
            }
        }
    }

    fn cp1_phi() -> ScalarField {
        let sum = LogLatticeSum::new(1, vec![vec![0], vec![1]], &[1.0, 1.0]).unwrap();
        ScalarField::from_terms(1, vec![Term::LogSum { coeff: 1.0, sum }])
    }

    #[test]
    fn logsum_cp1_values() {
        let phi = cp1_phi();
        let (v, g, h) = phi.eval(&[0.0]).unwrap();
        assert!((v - 0.5 * 2.0_f64.ln()).abs() < 1e-15);
        assert!((g[0] - 0.5).abs() < 1e-15);
        assert!((h[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn logsum_large_argument_is_stable() {
        let phi = cp1_phi();
        let (v, g, _) = phi.eval(&[300.0]).unwrap();
        assert!((v - 300.0).abs() < 1e-9);
        assert!((g[0] - 1.0).abs() < 1e-12);
        let (v, g, _) = phi.eval(&[-300.0]).unwrap();
        assert!(v.abs() < 1e-9);
        assert!(g[0].abs() < 1e-12);
    }

    #[test]
    fn derivative_consistency_random_points() {
        let sum = LogLatticeSum::new(
            2,
            vec![vec![0, 0], vec![1, 0], vec![0, 1]],
            &[1.0, 2.0, 0.5],
        )
        .unwrap();
        let mut field = ScalarField::from_terms(2, vec![Term::LogSum { coeff: 1.5, sum }]);
        field.push_term(Term::Exp {
            coeff: 0.3,
            direction: vec![0.2, -0.1],
        });
        field.push_term(Term::Poly {
            monomials: vec![Monomial {
                coeff: 0.25,
                powers: vec![2, 1],
            }],
        });
        field.push_term(Term::Bump {
            amplitude: -0.4,
            center: vec![0.5, -0.3],
            radius: 1.5,
        });
        field.add_affine(&[0.7, -0.2], 1.1);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            fd_check(&field, &xi, 1e-5);
        }
    }

    #[test]
    fn grid_interpolates_smooth_function_1d() {
        let f = |x: &[f64]| (0.7 * x[0]).sin();
        let grid = GridField::sample(1, 3.0, vec![121], f).unwrap();
        let field = ScalarField::from_terms(1, vec![Term::Grid { coeff: 1.0, grid }]);
        // interior points: the natural boundary condition only pollutes a
        // layer near the box edge
        for &x in &[-2.2, -0.9, 0.05, 1.7, 2.2] {
            let (v, g, h) = field.eval(&[x]).unwrap();
            assert!((v - (0.7 * x).sin()).abs() < 1e-6);
            assert!((g[0] - 0.7 * (0.7 * x).cos()).abs() < 1e-4);
            assert!((h[0] + 0.49 * (0.7 * x).sin()).abs() < 2e-3);
        }
    }

    #[test]
    fn grid_interpolates_smooth_function_2d() {
        let f = |x: &[f64]| (0.5 * x[0]).sin() * (0.4 * x[1]).cos() + 0.1 * x[0] * x[1];
        let grid = GridField::sample(2, 3.0, vec![81, 81], f).unwrap();
        let gfield = ScalarField::from_terms(2, vec![Term::Grid { coeff: 1.0, grid }]);
        for &(p, q) in &[(-2.2, 1.3), (0.4, -0.7), (1.9, 2.4)] {
            let v = gfield.value(&[p, q]).unwrap();
            assert!((v - f(&[p, q])).abs() < 1e-5, "value at ({p},{q})");
            // interpolant self-consistency: analytic derivatives match its own
            // central differences
            fd_check(&gfield, &[p, q], 1e-4);
        }
    }

    #[test]
    fn grid_query_outside_box_is_error() {
        let grid = GridField::sample(1, 2.0, vec![17], |x| x[0]).unwrap();
        let field = ScalarField::from_terms(1, vec![Term::Grid { coeff: 1.0, grid }]);
        assert!(field.value(&[1.99]).is_ok());
        assert!(matches!(
            field.value(&[2.01]),
            Err(Error::OutsideGridBox(_))
        ));
        assert!(!field.contains(&[2.01]));
    }

    #[test]
    fn bump_is_compactly_supported_and_c2() {
        let field = ScalarField::from_terms(
            1,
            vec![Term::Bump {
                amplitude: 2.0,
                center: vec![0.0],
                radius: 1.0,
            }],
        );
        let (v, g, h) = field.eval(&[1.0 - 1e-7]).unwrap();
        assert!(v.abs() < 1e-12 && g[0].abs() < 1e-6 && h[0].abs() < 1e-4);
        let (v, g, h) = field.eval(&[1.5]).unwrap();
        assert!(v == 0.0 && g[0] == 0.0 && h[0] == 0.0);
        let (v, _, _) = field.eval(&[0.0]).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn scale_and_add_are_linear() {
        let f = cp1_phi();
        let g = f.scale(2.5);
        let s = f.add(&g);
        let x = [0.37];
        let (fv, fg, fh) = f.eval(&x).unwrap();
        let (sv, sg, sh) = s.eval(&x).unwrap();
        assert!((sv - 3.5 * fv).abs() < 1e-14);
        assert!((sg[0] - 3.5 * fg[0]).abs() < 1e-14);
        assert!((sh[0] - 3.5 * fh[0]).abs() < 1e-14);
    }
}
