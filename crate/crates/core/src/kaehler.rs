//! The toric potential `phi`, its moment map, and the Legendre duality
//! between `N_R` and the polytope interior.

use crate::error::{Error, Result};
use crate::field::{LogLatticeSum, ScalarField, Term};
use crate::linalg::{invert_dense, norm2, solve_dense};
use crate::toric::Polytope;

/// `phi(xi) = 0.5 log sum_u c_u exp(2 <u, xi>)` over the polytope's lattice
/// points, with positive weights on at least every vertex.
#[derive(Debug, Clone)]
pub struct ToricPotential {
    polytope: Polytope,
    support: Vec<Vec<i64>>,
    weights: Vec<f64>,
    phi: ScalarField,
}

impl ToricPotential {
    pub fn unit_weights(polytope: Polytope) -> Result<Self> {
        let w = vec![1.0; polytope.lattice_points().len()];
        Self::with_weights(polytope, &w)
    }

    /// Weights aligned with `polytope.lattice_points()`. Zero weights drop the
    /// point from the support; every vertex must keep a positive weight.
    pub fn with_weights(polytope: Polytope, weights: &[f64]) -> Result<Self> {
        let pts = polytope.lattice_points();
        if weights.len() != pts.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} weights, got {}",
                pts.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidInput(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let mut support = Vec::new();
        let mut kept = Vec::new();
        for (u, &w) in pts.iter().zip(weights) {
            if w > 0.0 {
                support.push(u.clone());
                kept.push(w);
            }
        }
        for v in polytope.vertices() {
            if !support.iter().any(|u| u == v) {
                return Err(Error::InvalidInput(format!(
                    "vertex {:?} has no positive weight; the potential would lose \
                     its asymptotic cone behavior",
                    v
                )));
            }
        }
        let sum = LogLatticeSum::new(polytope.dim(), support.clone(), &kept)?;
        let phi = ScalarField::from_terms(
            polytope.dim(),
            vec![Term::LogSum { coeff: 1.0, sum }],
        );
        Ok(Self {
            polytope,
            support,
            weights: kept,
            phi,
        })
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    /// The potential as a scalar field (for building section potentials).
    pub fn phi_field(&self) -> &ScalarField {
        &self.phi
    }

    pub fn support(&self) -> &[Vec<i64>] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn phi_eval(&self, xi: &[f64]) -> Result<f64> {
        self.phi.value(xi)
    }

    pub fn phi_grad(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.phi.gradient(xi)
    }

    /// Hessian of `phi`; lazily asserts positive definiteness.
    pub fn phi_hess(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let h = self.phi.hessian(xi)?;
        if !is_spd(&h, self.dim()) {
            return Err(Error::InvalidInput(format!(
                "phi Hessian lost positive definiteness at xi = {:?}",
                xi
            )));
        }
        Ok(h)
    }

    /// Inverse Hessian `phi^{jk}` at `xi`.
    pub fn phi_hess_inv(&self, xi: &[f64]) -> Result<Vec<f64>> {
        invert_dense(&self.phi_hess(xi)?, self.dim())
    }

    /// Normalized exponential weights `p_u` of the support points at `xi`;
    /// the moment map is their mean. Useful where downstream quantities
    /// (facet values of the moment image) need cancellation-free sums.
    pub fn moment_weights(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut exponents = Vec::with_capacity(self.support.len());
        let mut amax = f64::NEG_INFINITY;
        for (u, w) in self.support.iter().zip(&self.weights) {
            let mut a = w.ln();
            for j in 0..n {
                a += 2.0 * u[j] as f64 * xi[j];
            }
            exponents.push(a);
            amax = amax.max(a);
        }
        let mut s = 0.0;
        let mut probs: Vec<f64> = exponents
            .iter()
            .map(|&a| {
                let e = (a - amax).exp();
                s += e;
                e
            })
            .collect();
        for p in probs.iter_mut() {
            *p /= s;
        }
        probs
    }

    /// The moment map `mu = d phi`, checked to land in the interior.
    pub fn moment_map(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let mu = self.phi.gradient(xi)?;
        for i in 0..self.polytope.fan().ray_count() {
            if self.polytope.facet_fn(i, &mu) <= 0.0 {
                return Err(Error::OutsidePolytope(format!(
                    "l_{}(mu(xi)) = {} at xi = {:?}",
                    i + 1,
                    self.polytope.facet_fn(i, &mu),
                    xi
                )));
            }
        }
        Ok(mu)
    }
}

fn is_spd(a: &[f64], n: usize) -> bool {
    // in-place Cholesky attempt
    let mut m = a.to_vec();
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if !d.is_finite() || d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        m[j * n + j] = d;
        for i in j + 1..n {
            let mut v = m[i * n + j];
            for k in 0..j {
                v -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = v / d;
        }
    }
    true
}

/// Mutually inverse Legendre diffeomorphisms `Phi = d phi : N_R -> P` and
/// `Psi = Phi^{-1}`, with the dual Hessian.
#[derive(Debug, Clone)]
pub struct LegendrePair {
    potential: ToricPotential,
    /// Interior margin on the facet functions below which inversion refuses.
    pub boundary_margin: f64,
    /// Required gradient residual; iteration polishes further when it can.
    pub tol: f64,
    pub max_iter: usize,
}

impl LegendrePair {
    pub fn new(potential: ToricPotential) -> Self {
        Self {
            potential,
            boundary_margin: 1e-6,
            tol: 1e-10,
            max_iter: 200,
        }
    }

    pub fn potential(&self) -> &ToricPotential {
        &self.potential
    }

    /// `Phi(xi) = d phi(xi)`.
    pub fn forward(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.potential.phi_grad(xi)
    }

    /// `Psi(x)`: damped Newton descent on the strictly convex conjugate
    /// problem `min_xi phi(xi) - <x, xi>`.
    pub fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.potential.dim();
        let p = self.potential.polytope();
        if p.min_facet_value(x) < self.boundary_margin {
            return Err(Error::BoundaryPoint(format!(
                "min_i l_i(x) = {} < margin {}",
                p.min_facet_value(x),
                self.boundary_margin
            )));
        }
        let objective = |xi: &[f64]| -> Result<f64> {
            let v = self.potential.phi_eval(xi)?;
            let dot: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
            Ok(v - dot)
        };
        let mut xi = vec![0.0; n];
        let mut fval = objective(&xi)?;
        let mut best_xi = xi.clone();
        let mut best_r = f64::INFINITY;
        for _ in 0..self.max_iter {
            let grad = self.potential.phi_grad(&xi)?;
            let r: Vec<f64> = grad.iter().zip(x).map(|(g, t)| g - t).collect();
            let rnorm = norm2(&r);
            if rnorm < best_r {
                best_r = rnorm;
                best_xi = xi.clone();
            } else if rnorm > 0.5 * best_r && best_r < 1e-10 {
                // noise floor reached
                break;
            }
            if rnorm <= 1e-15 {
                break;
            }
            let mut h = self.potential.phi_hess(&xi)?;
            let mut step: Vec<f64> = r.iter().map(|v| -v).collect();
            solve_dense(&mut h, n, &mut step)?;
            if rnorm < 1e-6 {
                // quadratic basin: full Newton steps, no line search (objective
                // comparisons are noise-dominated at this scale)
                for (a, b) in xi.iter_mut().zip(&step) {
                    *a += b;
                }
                continue;
            }
            let slope: f64 = r.iter().zip(&step).map(|(a, b)| a * b).sum();
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand: Vec<f64> = xi.iter().zip(&step).map(|(a, b)| a + alpha * b).collect();
                match objective(&cand) {
                    Ok(v) if v <= fval + 1e-4 * alpha * slope => {
                        xi = cand;
                        fval = v;
                        accepted = true;
                        break;
                    }
                    _ => alpha *= 0.5,
                }
            }
            if !accepted {
                if rnorm < 1e-4 {
                    // the merit comparison has hit rounding noise; switch to
                    // raw polishing steps
                    for (a, b) in xi.iter_mut().zip(&step) {
                        *a += b;
                    }
                    continue;
                }
                break;
            }
        }
        if best_r <= self.tol {
            Ok(best_xi)
        } else {
            Err(Error::NoConvergence(format!(
                "residual {} after Newton iteration",
                best_r
            )))
        }
    }

    /// Hessian of the dual potential: inverse of `Hess phi` at `Psi(x)`.
    pub fn psi_hess(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xi = self.inverse(x)?;
        self.potential.phi_hess_inv(&xi)
    }
}
