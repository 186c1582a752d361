//! Invariant hermitian metric potentials on divisor line bundles: the
//! Guillemin reference with closed-form derivatives, grid corrections,
//! curvature and the Hermitian-Einstein residual.

use crate::error::{Error, Result};
use crate::field::{LogLatticeSum, ScalarField, Term};
use crate::kaehler::ToricPotential;

/// A `T_N`-invariant hermitian metric: Guillemin reference for a divisor
/// representative plus a scalar-field correction.
#[derive(Debug, Clone)]
pub struct MetricPotential {
    ctx: ToricPotential,
    divisor: Vec<i64>,
    correction: ScalarField,
}

impl MetricPotential {
    pub fn new(ctx: ToricPotential, divisor: Vec<i64>, correction: ScalarField) -> Result<Self> {
        if divisor.len() != ctx.polytope().fan().ray_count() {
            return Err(Error::InvalidInput(format!(
                "divisor has {} entries, expected {}",
                divisor.len(),
                ctx.polytope().fan().ray_count()
            )));
        }
        if correction.dim() != ctx.dim() {
            return Err(Error::InvalidInput("correction dimension mismatch".into()));
        }
        Ok(Self {
            ctx,
            divisor,
            correction,
        })
    }

    pub fn guillemin(ctx: ToricPotential, divisor: Vec<i64>) -> Result<Self> {
        let dim = ctx.dim();
        Self::new(ctx, divisor, ScalarField::zero(dim))
    }

    pub fn context(&self) -> &ToricPotential {
        &self.ctx
    }

    pub fn divisor(&self) -> &[i64] {
        &self.divisor
    }

    pub fn correction(&self) -> &ScalarField {
        &self.correction
    }

    /// The full potential `g_h = g_{h0,a} + f` as a scalar field.
    pub fn total_potential(&self) -> Result<ScalarField> {
        Ok(guillemin_field(&self.ctx, &self.divisor)?.add(&self.correction))
    }

    /// Hessian of `g_h` at `xi`: the curvature two-form coefficients in the
    /// `d xi ^ du` frame.
    pub fn curvature_matrix(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.total_potential()?.hessian(xi)
    }

    /// `sum_{jk} phi^{jk} (g_h)_{jk} - lambda` at `xi`.
    pub fn he_residual(&self, lambda: f64, xi: &[f64]) -> Result<f64> {
        let n = self.ctx.dim();
        let inv = self.ctx.phi_hess_inv(xi)?;
        let h = self.curvature_matrix(xi)?;
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                s += inv[j * n + k] * h[j * n + k];
            }
        }
        Ok(s - lambda)
    }
}

/// The Guillemin potential
/// `g_{h0,a} = -1/2 sum_i a_i log( sum_u c_u l_i(u) e^{2<u,xi>} / sum_u c_u e^{2<u,xi>} )`
/// assembled from shifted lattice log-sums with exact derivatives.
pub fn guillemin_field(ctx: &ToricPotential, divisor: &[i64]) -> Result<ScalarField> {
    let p = ctx.polytope();
    let d = p.fan().ray_count();
    if divisor.len() != d {
        return Err(Error::InvalidInput(format!(
            "divisor has {} entries, expected {d}",
            divisor.len()
        )));
    }
    let n = ctx.dim();
    let mut field = ScalarField::zero(n);
    let total: i64 = divisor.iter().sum();
    if divisor.iter().all(|&a| a == 0) {
        return Ok(field);
    }
    if total != 0 {
        let base = LogLatticeSum::new(n, ctx.support().to_vec(), ctx.weights())?;
        field.push_term(Term::LogSum {
            coeff: total as f64,
            sum: base,
        });
    }
    for (i, &ai) in divisor.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        let mut pts = Vec::new();
        let mut w = Vec::new();
        for (u, &cu) in ctx.support().iter().zip(ctx.weights()) {
            let li = p.facet_fn_int(i, u);
            if li > 0 {
                pts.push(u.clone());
                w.push(cu * li as f64);
            }
        }
        if pts.is_empty() {
            return Err(Error::EmptyStratum(format!(
                "no support point off facet {} (polytope should be ample)",
                i + 1
            )));
        }
        let sum = LogLatticeSum::new(n, pts, &w)?;
        field.push_term(Term::LogSum {
            coeff: -(ai as f64),
            sum,
        });
    }
    Ok(field)
}

/// Independent evaluation route for tests and cross-checks:
/// `g_{h0,a}(xi) = -1/2 sum_i a_i log(l_i(mu(xi)))`, with `l_i(mu)` taken as
/// the probability-weighted mean of the facet values `l_i(u)` so the facet
/// function of the moment image carries full relative precision near the
/// boundary.
pub fn guillemin_via_moment_map(ctx: &ToricPotential, divisor: &[i64], xi: &[f64]) -> Result<f64> {
    let probs = ctx.moment_weights(xi);
    let p = ctx.polytope();
    let mut g = 0.0;
    for (i, &ai) in divisor.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        let li: f64 = ctx
            .support()
            .iter()
            .zip(&probs)
            .map(|(u, &pu)| pu * p.facet_fn_int(i, u) as f64)
            .sum();
        if li <= 0.0 {
            return Err(Error::OutsidePolytope(format!(
                "l_{}(mu) = {} at xi = {:?}",
                i + 1,
                li,
                xi
            )));
        }
        g -= 0.5 * ai as f64 * li.ln();
    }
    Ok(g)
}
