//! The transform between invariant metric potentials and Lagrangian sections
//! of the dual fibration, with lift bookkeeping.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::growth::{infer_class, GrowthConfig, GrowthReport};
use crate::kaehler::{LegendrePair, ToricPotential};
use crate::metrics::{guillemin_field, MetricPotential};
use crate::toric::{iota, PicardClass};

/// A Lagrangian section presented by a lift potential `g`; the section map is
/// `y = dg`. Exactness makes the graph Lagrangian by construction.
#[derive(Debug, Clone)]
pub struct LagrangianSection {
    ctx: ToricPotential,
    potential: ScalarField,
    /// Divisor representative of this particular lift, when known.
    lift_divisor: Option<Vec<i64>>,
    /// Inferred or inherited divisor class.
    class: Option<PicardClass>,
}

impl LagrangianSection {
    pub fn new(ctx: ToricPotential, potential: ScalarField) -> Self {
        Self {
            ctx,
            potential,
            lift_divisor: None,
            class: None,
        }
    }

    /// A section whose lift representative is already known (solver output,
    /// hand-built reference sections).
    pub fn with_lift(
        ctx: ToricPotential,
        potential: ScalarField,
        divisor: Vec<i64>,
    ) -> Result<Self> {
        let class = ctx.polytope().picard_reduce(&divisor)?;
        Ok(Self {
            ctx,
            potential,
            lift_divisor: Some(divisor),
            class: Some(class),
        })
    }

    pub fn context(&self) -> &ToricPotential {
        &self.ctx
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    pub fn lift_divisor(&self) -> Option<&[i64]> {
        self.lift_divisor.as_deref()
    }

    pub fn class(&self) -> Option<&PicardClass> {
        self.class.as_ref()
    }

    /// `y(xi) = dg(xi)`.
    pub fn y(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.potential.gradient(xi)
    }

    /// The section read over the polytope: `y(Psi(x))` for interior `x`.
    pub fn y_over_polytope(&self, lp: &LegendrePair, x: &[f64]) -> Result<Vec<f64>> {
        let xi = lp.inverse(x)?;
        self.y(&xi)
    }

    /// Jacobian `dy/dx` at an interior `x`, by the chain rule through `Psi`:
    /// `Hess(g) . (Hess phi)^{-1}` at `xi = Psi(x)`.
    pub fn y_jacobian_over_polytope(&self, lp: &LegendrePair, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.ctx.dim();
        let xi = lp.inverse(x)?;
        let hg = self.potential.hessian(&xi)?;
        let inv = self.ctx.phi_hess_inv(&xi)?;
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += hg[j * n + l] * inv[l * n + k];
                }
                out[j * n + k] = s;
            }
        }
        Ok(out)
    }
}

/// The forward transform: a metric potential becomes the section `y = d g_h`.
pub fn transform(m: &MetricPotential) -> Result<LagrangianSection> {
    let potential = m.total_potential()?;
    let ctx = m.context().clone();
    let class = ctx.polytope().picard_reduce(m.divisor())?;
    Ok(LagrangianSection {
        ctx,
        potential,
        lift_divisor: Some(m.divisor().to_vec()),
        class: Some(class),
    })
}

/// Shift the lift by `u in M`: the potential drops `<u, xi>`, the divisor
/// representative gains `iota(u)`, the class is unchanged.
pub fn lift_shift(s: &LagrangianSection, u: &[i64]) -> LagrangianSection {
    let n = s.ctx.dim();
    assert_eq!(u.len(), n);
    let lin: Vec<f64> = u.iter().map(|&v| -(v as f64)).collect();
    let mut potential = s.potential.clone();
    potential.add_affine(&lin, 0.0);
    let shift = iota(s.ctx.polytope().fan(), u);
    let lift_divisor = s
        .lift_divisor
        .as_ref()
        .map(|a| a.iter().zip(&shift).map(|(x, s)| x + s).collect());
    LagrangianSection {
        ctx: s.ctx.clone(),
        potential,
        lift_divisor,
        class: s.class.clone(),
    }
}

/// The inverse transform. Succeeds when the growth checks certify a divisor
/// representative; the correction is the exact field difference
/// `f = g - g_{h0,a}`.
pub fn inverse_transform(
    s: &LagrangianSection,
    config: &GrowthConfig,
) -> Result<(MetricPotential, GrowthReport)> {
    let inferred = infer_class(s, config)?;
    let (a, report) = match inferred {
        Some(pair) => pair,
        None => {
            return Err(Error::NotExtendable(
                "no divisor representative is consistent with the section's growth".into(),
            ))
        }
    };
    let reference = guillemin_field(&s.ctx, &a)?;
    let correction = s.potential.add(&reference.negate());
    let metric = MetricPotential::new(s.ctx.clone(), a, correction)?;
    Ok((metric, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Term;
    use crate::toric::fixtures::{cp1, cp2};

    fn ctx1() -> ToricPotential {
        ToricPotential::unit_weights(cp1()).unwrap()
    }

    fn ctx2() -> ToricPotential {
        ToricPotential::unit_weights(cp2()).unwrap()
    }

    #[test]
    fn transform_guillemin_cp1() {
        let m = MetricPotential::guillemin(ctx1(), vec![1, 0]).unwrap();
        let s = transform(&m).unwrap();
        assert!((s.y(&[0.0]).unwrap()[0] + 0.5).abs() < 1e-13);
        assert_eq!(s.lift_divisor().unwrap(), &[1, 0]);
    }

    #[test]
    fn transform_zero_metric_is_zero_section() {
        let m = MetricPotential::guillemin(ctx1(), vec![0, 0]).unwrap();
        let s = transform(&m).unwrap();
        for &xi in &[-3.0, 0.0, 2.5] {
            assert_eq!(s.y(&[xi]).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn transform_is_linear_in_corrections() {
        let ctx = ctx1();
        let bump = ScalarField::from_terms(
            1,
            vec![Term::Bump {
                amplitude: 0.4,
                center: vec![0.3],
                radius: 1.2,
            }],
        );
        let m0 = MetricPotential::guillemin(ctx.clone(), vec![1, 0]).unwrap();
        let m = MetricPotential::new(ctx, vec![1, 0], bump.clone()).unwrap();
        let s0 = transform(&m0).unwrap();
        let s = transform(&m).unwrap();
        for &xi in &[-1.0, 0.0, 0.7] {
            let expect = s0.y(&[xi]).unwrap()[0] + bump.gradient(&[xi]).unwrap()[0];
            assert!((s.y(&[xi]).unwrap()[0] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn lift_shift_examples() {
        let m = MetricPotential::guillemin(ctx1(), vec![1, 0]).unwrap();
        let s = transform(&m).unwrap();
        let shifted = lift_shift(&s, &[1]);
        assert_eq!(shifted.lift_divisor().unwrap(), &[2, -1]);
        assert_eq!(shifted.class(), s.class());
        // potential dropped <u, xi>
        let xi = [0.8];
        assert!(
            (shifted.potential().value(&xi).unwrap()
                - (s.potential().value(&xi).unwrap() - 0.8))
                .abs()
                < 1e-14
        );
        // identity shift
        let same = lift_shift(&s, &[0]);
        assert_eq!(same.lift_divisor().unwrap(), &[1, 0]);
        // round trip
        let back = lift_shift(&shifted, &[-1]);
        assert_eq!(back.lift_divisor().unwrap(), &[1, 0]);
        assert!(
            (back.potential().value(&xi).unwrap() - s.potential().value(&xi).unwrap()).abs()
                < 1e-14
        );
    }

    #[test]
    fn section_over_polytope_boundary_values() {
        let m = MetricPotential::guillemin(ctx1(), vec![1, 0]).unwrap();
        let s = transform(&m).unwrap();
        let lp = LegendrePair::new(ctx1());
        // y(x) = x - 1 on the interval
        let y = s.y_over_polytope(&lp, &[1e-4]).unwrap()[0];
        assert!((y + 1.0).abs() < 1e-3);
        let y = s.y_over_polytope(&lp, &[1.0 - 1e-4]).unwrap()[0];
        assert!(y.abs() < 1e-3);
        assert!(matches!(
            s.y_over_polytope(&lp, &[0.0]),
            Err(Error::BoundaryPoint(_))
        ));
    }

    #[test]
    fn section_exactness_curl_vanishes() {
        // antisymmetric part of the numerical Jacobian of y is zero
        let ctx = ctx2();
        let mut f = crate::metrics::guillemin_field(&ctx, &[1, 1, 1]).unwrap();
        f.push_term(Term::Bump {
            amplitude: 0.3,
            center: vec![0.4, -0.2],
            radius: 1.5,
        });
        let s = LagrangianSection::new(ctx, f);
        let h = 1e-5;
        for &(p, q) in &[(0.0, 0.0), (1.2, -0.8), (-2.0, 1.5)] {
            let mut jac = [0.0; 4];
            for j in 0..2 {
                let mut xp = [p, q];
                let mut xm = [p, q];
                xp[j] += h;
                xm[j] -= h;
                let yp = s.y(&xp).unwrap();
                let ym = s.y(&xm).unwrap();
                for i in 0..2 {
                    jac[i * 2 + j] = (yp[i] - ym[i]) / (2.0 * h);
                }
            }
            assert!((jac[1] - jac[2]).abs() < 1e-6, "curl = {}", jac[1] - jac[2]);
        }
    }
}
