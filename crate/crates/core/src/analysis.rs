//! Normalized slope (quadrature and topological routes), the harmonic
//! section solver, special-Lagrangian residuals and the large-radius
//! rescaling check.

use crate::error::{Error, Result};
use crate::field::{GridField, ScalarField, Term};
use crate::kaehler::{LegendrePair, ToricPotential};
use crate::linalg::{lstsq_columns, BandMatrix, Complex};
use crate::metrics::guillemin_field;
use crate::syz::LagrangianSection;
use crate::toric::Polytope;

/// `(1 / Vol P) sum_k a_k vol_lat(F_k)`; the sign convention makes the
/// interval case come out as `a_1 + a_2`.
pub fn slope_topological(p: &Polytope, a: &[i64]) -> f64 {
    facet_contributions(p, a).iter().sum::<f64>() / p.volume()
}

/// Per-facet terms `a_k vol_lat(F_k)` of the boundary pairing.
pub fn facet_contributions(p: &Polytope, a: &[i64]) -> Vec<f64> {
    (0..p.fan().ray_count())
        .map(|k| a[k] as f64 * p.facet_volume(k))
        .collect()
}

#[derive(Debug, Clone)]
pub struct QuadratureOptions {
    /// Distance (in facet-function units) inside which the facet-limit model
    /// replaces direct evaluation.
    pub boundary_layer: f64,
    pub tol: f64,
    pub max_depth: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            boundary_layer: 1e-2,
            tol: 1e-4,
            max_depth: 14,
        }
    }
}

/// Average of `div_x y` over the polytope: interior quadrature on the
/// boundary-shrunk polytope plus the boundary-layer ring handled with the
/// facet-limit model `<y, v_k> -> -a_k`.
///
/// The section must carry the divisor representative of its lift (set by the
/// forward transform or by class inference); the caller is responsible for
/// the growth conditions holding, otherwise the value is meaningless.
pub fn slope_quadrature(s: &LagrangianSection, opts: &QuadratureOptions) -> Result<f64> {
    let a = s
        .lift_divisor()
        .ok_or_else(|| {
            Error::InvalidInput(
                "section carries no divisor representative; transform or infer first".into(),
            )
        })?
        .to_vec();
    let p = s.context().polytope().clone();
    let lp = LegendrePair::new(s.context().clone());
    let div_y = |x: &[f64]| -> Result<f64> {
        let jac = s.y_jacobian_over_polytope(&lp, x)?;
        let n = p.dim();
        Ok((0..n).map(|j| jac[j * n + j]).sum())
    };
    match p.dim() {
        1 => {
            let lo = p.vertices().iter().map(|v| v[0]).min().unwrap() as f64;
            let hi = p.vertices().iter().map(|v| v[0]).max().unwrap() as f64;
            let delta = opts.boundary_layer;
            let div_y1 = |x: f64| div_y(&[x]);
            let interior =
                adaptive_interval(&div_y1, lo + delta, hi - delta, opts.tol * 0.5, opts.max_depth)?;
            // facet limits: y -> -a_i / v_i at each endpoint
            let (mut left_limit, mut right_limit) = (0.0, 0.0);
            for i in 0..p.fan().ray_count() {
                let v = p.fan().generator(i)[0];
                let at_lo = (lo * v as f64 + p.offsets()[i] as f64).abs() < 1e-9;
                let limit = -(a[i] as f64) / v as f64;
                if at_lo {
                    left_limit = limit;
                } else {
                    right_limit = limit;
                }
            }
            let y_in_left = s.y_over_polytope(&lp, &[lo + delta])?[0];
            let y_in_right = s.y_over_polytope(&lp, &[hi - delta])?[0];
            let layers = (y_in_left - left_limit) + (right_limit - y_in_right);
            Ok((interior + layers) / p.volume())
        }
        2 => {
            let delta = opts.boundary_layer;
            let inner = shrunk_vertices(&p, delta)?;
            // interior: adaptive triangle quadrature from the centroid fan
            let cx = inner.iter().map(|v| v[0]).sum::<f64>() / inner.len() as f64;
            let cy = inner.iter().map(|v| v[1]).sum::<f64>() / inner.len() as f64;
            let mut interior = 0.0;
            let m = inner.len();
            for i in 0..m {
                let tri = [
                    [cx, cy],
                    [inner[i][0], inner[i][1]],
                    [inner[(i + 1) % m][0], inner[(i + 1) % m][1]],
                ];
                interior += adaptive_triangle(
                    &div_y,
                    &tri,
                    opts.tol * 0.5 / m as f64,
                    opts.max_depth,
                )?;
            }
            // ring between the true boundary and the shrunk one, by the
            // divergence theorem: outer edge uses the facet limits, the inner
            // edge is quadrature of y . n over the shrunk polygon boundary
            let outer: f64 = facet_contributions(&p, &a).iter().sum();
            let mut ring_inner = 0.0;
            for i in 0..m {
                let b = &inner[(i + 1) % m];
                let av = &inner[i];
                // outward normal of this inner edge matches the facet it
                // parallels: identify by midpoint's smallest facet value
                let mid = [(av[0] + b[0]) / 2.0, (av[1] + b[1]) / 2.0];
                let k = (0..p.fan().ray_count())
                    .min_by(|&i1, &i2| {
                        p.facet_fn(i1, &mid)
                            .partial_cmp(&p.facet_fn(i2, &mid))
                            .unwrap()
                    })
                    .unwrap();
                let g = p.fan().generator(k);
                let vn = ((g[0] * g[0] + g[1] * g[1]) as f64).sqrt();
                let nrm = [-(g[0] as f64) / vn, -(g[1] as f64) / vn];
                let len = ((b[0] - av[0]).powi(2) + (b[1] - av[1]).powi(2)).sqrt();
                let flux = |t: f64| -> Result<f64> {
                    let x = [av[0] + t * (b[0] - av[0]), av[1] + t * (b[1] - av[1])];
                    let y = s.y_over_polytope(&lp, &x)?;
                    Ok(y[0] * nrm[0] + y[1] * nrm[1])
                };
                ring_inner += adaptive_interval(&flux, 0.0, 1.0, opts.tol * 0.1 / m as f64, opts.max_depth)? * len;
            }
            Ok((interior + outer - ring_inner) / p.volume())
        }
        n => Err(Error::Unsupported(format!(
            "slope quadrature implemented for n <= 2, got {n}"
        ))),
    }
}

/// Vertices of `{l_i >= delta}`, ordered counterclockwise.
fn shrunk_vertices(p: &Polytope, delta: f64) -> Result<Vec<Vec<f64>>> {
    let fan = p.fan();
    let n = 2;
    let mut out = Vec::new();
    for cone in fan.max_cones() {
        let mut mmat = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for (row, &gi) in cone.iter().enumerate() {
            for col in 0..n {
                mmat[row * n + col] = fan.generator(gi)[col] as f64;
            }
            b[row] = delta - p.offsets()[gi] as f64;
        }
        crate::linalg::solve_dense(&mut mmat, n, &mut b)?;
        out.push(b);
    }
    let cx = out.iter().map(|v| v[0]).sum::<f64>() / out.len() as f64;
    let cy = out.iter().map(|v| v[1]).sum::<f64>() / out.len() as f64;
    out.sort_by(|u, w| {
        (u[1] - cy)
            .atan2(u[0] - cx)
            .partial_cmp(&(w[1] - cy).atan2(w[0] - cx))
            .unwrap()
    });
    Ok(out)
}

fn gauss5_interval(f: &impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    const XS: [f64; 5] = [
        -0.906179845938664,
        -0.538469310105683,
        0.0,
        0.538469310105683,
        0.906179845938664,
    ];
    const WS: [f64; 5] = [
        0.236926885056189,
        0.478628670499366,
        0.568888888888889,
        0.478628670499366,
        0.236926885056189,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    for (x, w) in XS.iter().zip(&WS) {
        s += w * f(mid + half * x)?;
    }
    Ok(s * half)
}

fn adaptive_interval(
    f: &impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let whole = gauss5_interval(f, a, b)?;
    let mid = 0.5 * (a + b);
    let left = gauss5_interval(f, a, mid)?;
    let right = gauss5_interval(f, mid, b)?;
    // refinement cannot beat the integrand's own evaluation noise (the
    // inverse Legendre map inside the integrand carries ~1e-12 jitter)
    let floor = 1e-11 * (1.0 + whole.abs());
    let err = (left + right - whole).abs();
    if err <= tol.max(floor) || depth == 0 {
        if depth == 0 && err > (tol * 8.0).max(8.0 * floor) {
            return Err(Error::QuadratureFailure(format!(
                "interval [{a}, {b}] did not converge (err {err})"
            )));
        }
        return Ok(left + right);
    }
    Ok(adaptive_interval(f, a, mid, tol * 0.5, depth - 1)?
        + adaptive_interval(f, mid, b, tol * 0.5, depth - 1)?)
}

/// Degree-5 seven-point rule on a triangle.
fn gauss_triangle(f: &impl Fn(&[f64]) -> Result<f64>, tri: &[[f64; 2]; 3]) -> Result<f64> {
    const W: [f64; 7] = [
        0.225,
        0.132394152788506,
        0.132394152788506,
        0.132394152788506,
        0.125939180544827,
        0.125939180544827,
        0.125939180544827,
    ];
    const A1: f64 = 0.059715871789770;
    const B1: f64 = 0.470142064105115;
    const A2: f64 = 0.797426985353087;
    const B2: f64 = 0.101286507323456;
    const BARY: [[f64; 3]; 7] = [
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [A1, B1, B1],
        [B1, A1, B1],
        [B1, B1, A1],
        [A2, B2, B2],
        [B2, A2, B2],
        [B2, B2, A2],
    ];
    let area = 0.5
        * ((tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
            - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]))
            .abs();
    let mut s = 0.0;
    for (w, bc) in W.iter().zip(&BARY) {
        let x = [
            bc[0] * tri[0][0] + bc[1] * tri[1][0] + bc[2] * tri[2][0],
            bc[0] * tri[0][1] + bc[1] * tri[1][1] + bc[2] * tri[2][1],
        ];
        s += w * f(&x)?;
    }
    Ok(s * area)
}

fn adaptive_triangle(
    f: &impl Fn(&[f64]) -> Result<f64>,
    tri: &[[f64; 2]; 3],
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let whole = gauss_triangle(f, tri)?;
    let m01 = [(tri[0][0] + tri[1][0]) / 2.0, (tri[0][1] + tri[1][1]) / 2.0];
    let m12 = [(tri[1][0] + tri[2][0]) / 2.0, (tri[1][1] + tri[2][1]) / 2.0];
    let m20 = [(tri[2][0] + tri[0][0]) / 2.0, (tri[2][1] + tri[0][1]) / 2.0];
    let children = [
        [tri[0], m01, m20],
        [m01, tri[1], m12],
        [m20, m12, tri[2]],
        [m01, m12, m20],
    ];
    let mut refined = 0.0;
    for c in &children {
        refined += gauss_triangle(f, c)?;
    }
    let floor = 1e-11 * (1.0 + whole.abs());
    let err = (refined - whole).abs();
    if err <= tol.max(floor) || depth == 0 {
        if depth == 0 && err > (tol * 8.0).max(8.0 * floor) {
            return Err(Error::QuadratureFailure(format!(
                "triangle quadrature stalled (err {err})"
            )));
        }
        return Ok(refined);
    }
    let mut s = 0.0;
    for c in &children {
        s += adaptive_triangle(f, c, tol * 0.25, depth - 1)?;
    }
    Ok(s)
}

/// Result of the harmonic solve: the correction grid, the solved slope and
/// the measured interior residual of the continuous equation.
#[derive(Debug, Clone)]
pub struct HarmonicSolution {
    pub divisor: Vec<i64>,
    pub lambda: f64,
    pub correction: GridField,
    /// Full potential `g_{h0,a} + f`.
    pub potential: ScalarField,
    pub grid_half: f64,
    pub resolution: usize,
    pub residual_max: f64,
    pub residual_rms: f64,
    /// Points where the interior residual was measured.
    pub residual_points: Vec<Vec<f64>>,
}

impl HarmonicSolution {
    pub fn section(&self, ctx: &ToricPotential) -> LagrangianSection {
        LagrangianSection::with_lift(ctx.clone(), self.potential.clone(), self.divisor.clone())
            .expect("solver divisor length matches the fan")
    }
}

/// Solve `sum phi^{jk} (g_{h0} + f)_{jk} = lambda` on `[-T, T]^n` with zero
/// Neumann data for the correction `f`, gauge `f(0) = 0`, and the scalar
/// `lambda` closing the otherwise rank-deficient system.
///
/// The singular Neumann operator `K` (null space: constants) is bumped to
/// `K + alpha e_0 e_0^T`; solving for the right-hand side and for the lambda
/// column then pins lambda by the gauge, which simultaneously enforces the
/// discrete solvability condition.
pub fn harmonic_solve(
    ctx: &ToricPotential,
    a: &[i64],
    grid_half: f64,
    resolution: usize,
) -> Result<HarmonicSolution> {
    let n = ctx.dim();
    if n > 2 {
        return Err(Error::Unsupported(
            "harmonic solver implemented for n <= 2".into(),
        ));
    }
    if resolution < 5 || resolution % 2 == 0 {
        return Err(Error::InvalidInput(
            "resolution must be odd and at least 5".into(),
        ));
    }
    let reference = guillemin_field(ctx, a)?;
    let nn = resolution;
    let h = 2.0 * grid_half / (nn - 1) as f64;
    let total = nn.pow(n as u32);
    let coord = |i: usize| -> f64 { -grid_half + h * i as f64 };
    let node_xi = |p: usize| -> Vec<f64> {
        match n {
            1 => vec![coord(p)],
            _ => vec![coord(p / nn), coord(p % nn)],
        }
    };
    let bandwidth = match n {
        1 => 2,
        _ => nn + 1,
    };
    let mut mat = BandMatrix::new(total, bandwidth, bandwidth);
    let mut rhs = vec![0.0; total];
    let mut lam_col = vec![0.0; total];
    let center = total / 2; // odd resolution: the node at xi = 0
    for p in 0..total {
        let (ix, iy) = match n {
            1 => (p, 0),
            _ => (p / nn, p % nn),
        };
        let on_x_edge = ix == 0 || ix == nn - 1;
        let on_y_edge = n == 2 && (iy == 0 || iy == nn - 1);
        if on_x_edge || on_y_edge {
            // zero normal derivative: first-order difference pairs; the
            // correction is asymptotically flat at the box edge
            if on_x_edge {
                let inward: isize = if ix == 0 { 1 } else { -1 };
                let q = (p as isize + inward * if n == 1 { 1 } else { nn as isize }) as usize;
                mat.add(p, p, -1.0);
                mat.add(p, q, 1.0);
            } else {
                let inward: isize = if iy == 0 { 1 } else { -1 };
                let q = (p as isize + inward) as usize;
                mat.add(p, p, -1.0);
                mat.add(p, q, 1.0);
            }
            continue;
        }
        let xi = node_xi(p);
        let inv = ctx.phi_hess_inv(&xi)?;
        let scale: f64 = inv.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
        let h2 = h * h;
        match n {
            1 => {
                let c = inv[0] / scale / h2;
                mat.add(p, p - 1, c);
                mat.add(p, p, -2.0 * c);
                mat.add(p, p + 1, c);
            }
            _ => {
                let cxx = inv[0] / scale / h2;
                let cyy = inv[3] / scale / h2;
                let cxy = (inv[1] + inv[2]) / 2.0 / scale / (4.0 * h2);
                mat.add(p, p - nn, cxx);
                mat.add(p, p, -2.0 * cxx - 2.0 * cyy);
                mat.add(p, p + nn, cxx);
                mat.add(p, p - 1, cyy);
                mat.add(p, p + 1, cyy);
                // mixed term, twice the cross coefficient
                mat.add(p, p + nn + 1, 2.0 * cxy);
                mat.add(p, p - nn - 1, 2.0 * cxy);
                mat.add(p, p + nn - 1, -2.0 * cxy);
                mat.add(p, p - nn + 1, -2.0 * cxy);
            }
        }
        // source: sum phi^{jk} (g_{h0})_{jk}
        let gh = reference.hessian(&xi)?;
        let mut rho = 0.0;
        for j in 0..n {
            for k in 0..n {
                rho += inv[j * n + k] * gh[j * n + k];
            }
        }
        rhs[p] = -rho / scale;
        lam_col[p] = 1.0 / scale;
    }
    // diagonal bump at the gauge node makes the operator invertible
    mat.add(center, center, 1.0);
    mat.factor()?;
    let mut f_r = rhs;
    mat.solve(&mut f_r);
    let mut f_c = lam_col;
    mat.solve(&mut f_c);
    if f_c[center].abs() < 1e-14 {
        return Err(Error::SolverFailure(
            "lambda column is degenerate at the gauge node".into(),
        ));
    }
    let lambda = -f_r[center] / f_c[center];
    let f: Vec<f64> = f_r
        .iter()
        .zip(&f_c)
        .map(|(r, c)| r + lambda * c)
        .collect();
    let correction = GridField::new(n, grid_half, vec![nn; n], f)?;
    let mut potential = reference.clone();
    potential.push_term(Term::Grid {
        coeff: 1.0,
        grid: correction.clone(),
    });
    // measure the continuous-equation residual in its well-conditioned
    // x-space form, div_x y - lambda, over an interior polytope grid: near
    // the box edge the xi-form coefficients phi^{jk} blow up exponentially
    // and would amplify interpolation noise in the correction
    let lp = LegendrePair::new(ctx.clone());
    let section = LagrangianSection::new(ctx.clone(), potential.clone());
    let p = ctx.polytope();
    let margin = 1e-2;
    let per_axis = 48usize;
    let lo: Vec<f64> = (0..n)
        .map(|j| p.vertices().iter().map(|v| v[j]).min().unwrap() as f64)
        .collect();
    let hi: Vec<f64> = (0..n)
        .map(|j| p.vertices().iter().map(|v| v[j]).max().unwrap() as f64)
        .collect();
    let mut residual_points = Vec::new();
    let mut idx = vec![0usize; n];
    'outer: loop {
        let x: Vec<f64> = (0..n)
            .map(|j| lo[j] + (idx[j] as f64 + 0.5) / per_axis as f64 * (hi[j] - lo[j]))
            .collect();
        if p.min_facet_value(&x) >= margin {
            residual_points.push(x);
        }
        let mut k = n;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
    let mut max_r = 0.0f64;
    let mut ss = 0.0;
    for pt in &residual_points {
        let jac = section.y_jacobian_over_polytope(&lp, pt)?;
        let div: f64 = (0..n).map(|j| jac[j * n + j]).sum();
        let v = div - lambda;
        max_r = max_r.max(v.abs());
        ss += v * v;
    }
    let residual_rms = (ss / residual_points.len() as f64).sqrt();
    let hbound = 100.0 * h * h * (1.0 + lambda.abs());
    if max_r > hbound {
        return Err(Error::ResidualTooLarge(format!(
            "interior residual {} exceeds {}",
            max_r, hbound
        )));
    }
    Ok(HarmonicSolution {
        divisor: a.to_vec(),
        lambda,
        correction,
        potential,
        grid_half,
        resolution: nn,
        residual_max: max_r,
        residual_rms,
        residual_points,
    })
}

/// Closed-form harmonic ansatz `g = c phi + <u, xi>` when the boundary system
/// `-c lambda_i + <u, v_i> = -a_i` is consistent; returns `(c, u, lambda)`.
pub fn harmonic_closed_form(ctx: &ToricPotential, a: &[i64]) -> Option<(f64, Vec<f64>, f64)> {
    let p = ctx.polytope();
    let n = p.dim();
    let d = p.fan().ray_count();
    // least squares on the d x (n+1) system, then verify consistency
    let mut cols: Vec<Vec<f64>> = vec![vec![0.0; d]; n + 1];
    let mut rhs = vec![0.0; d];
    for i in 0..d {
        cols[0][i] = -(p.offsets()[i] as f64);
        for j in 0..n {
            cols[j + 1][i] = p.fan().generator(i)[j] as f64;
        }
        rhs[i] = -(a[i] as f64);
    }
    let sol = lstsq_columns(&cols, &rhs).ok()?;
    for i in 0..d {
        let mut v = cols[0][i] * sol[0];
        for j in 0..n {
            v += cols[j + 1][i] * sol[j + 1];
        }
        if (v - rhs[i]).abs() > 1e-9 {
            return None;
        }
    }
    let c = sol[0];
    let u = sol[1..].to_vec();
    Some((c, u, c * n as f64))
}

/// The ansatz as a section: potential `c phi + <u, xi>`.
pub fn closed_form_section(ctx: &ToricPotential, c: f64, u: &[f64]) -> LagrangianSection {
    let mut potential = ctx.phi_field().scale(c);
    potential.add_affine(u, 0.0);
    LagrangianSection::new(ctx.clone(), potential)
}

/// Pointwise special-Lagrangian residual `Im(e^{i theta} det(I - i dy/dx))`
/// over an interior grid of the polytope.
#[derive(Debug, Clone)]
pub struct SlagResidual {
    pub theta: f64,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub max_norm: f64,
}

pub fn slag_residual(
    s: &LagrangianSection,
    theta: f64,
    per_axis: usize,
    margin: f64,
) -> Result<SlagResidual> {
    let p = s.context().polytope();
    let n = p.dim();
    if n > 2 {
        return Err(Error::Unsupported(
            "slag residual implemented for n <= 2".into(),
        ));
    }
    let lp = LegendrePair::new(s.context().clone());
    let lo: Vec<f64> = (0..n)
        .map(|j| p.vertices().iter().map(|v| v[j]).min().unwrap() as f64)
        .collect();
    let hi: Vec<f64> = (0..n)
        .map(|j| p.vertices().iter().map(|v| v[j]).max().unwrap() as f64)
        .collect();
    let mut points = Vec::new();
    match n {
        1 => {
            for i in 0..per_axis {
                let t = (i as f64 + 0.5) / per_axis as f64;
                let x = lo[0] + t * (hi[0] - lo[0]);
                if p.min_facet_value(&[x]) >= margin {
                    points.push(vec![x]);
                }
            }
        }
        _ => {
            for i in 0..per_axis {
                for j in 0..per_axis {
                    let tx = (i as f64 + 0.5) / per_axis as f64;
                    let ty = (j as f64 + 0.5) / per_axis as f64;
                    let x = [
                        lo[0] + tx * (hi[0] - lo[0]),
                        lo[1] + ty * (hi[1] - lo[1]),
                    ];
                    if p.min_facet_value(&x) >= margin {
                        points.push(x.to_vec());
                    }
                }
            }
        }
    }
    let phase = Complex::new(theta.cos(), theta.sin());
    let mut values = Vec::with_capacity(points.len());
    let mut max_norm = 0.0f64;
    for x in &points {
        let jac = s.y_jacobian_over_polytope(&lp, x)?;
        let det = match n {
            1 => Complex::ONE.sub(Complex::new(0.0, 1.0).mul(Complex::new(jac[0], 0.0))),
            _ => {
                let m00 = Complex::new(1.0, -jac[0]);
                let m11 = Complex::new(1.0, -jac[3]);
                let m01 = Complex::new(0.0, -jac[1]);
                let m10 = Complex::new(0.0, -jac[2]);
                m00.mul(m11).sub(m01.mul(m10))
            }
        };
        let r = phase.mul(det).im;
        values.push(r);
        max_norm = max_norm.max(r.abs());
    }
    Ok(SlagResidual {
        theta,
        points,
        values,
        max_norm,
    })
}

/// Rescale the fiber coordinates: the potential becomes `epsilon g`. The
/// rescaled section generally sits in no divisor class (its boundary limits
/// are no longer integers), so lift bookkeeping is dropped.
pub fn fiber_rescale(s: &LagrangianSection, epsilon: f64) -> LagrangianSection {
    LagrangianSection::new(s.context().clone(), s.potential().scale(epsilon))
}

/// Max-norm of the harmonic-equation residual `div_x y - lambda` of a
/// section over interior sample points (x-space form).
pub fn harmonic_residual_x(
    s: &LagrangianSection,
    lambda: f64,
    per_axis: usize,
    margin: f64,
) -> Result<f64> {
    let p = s.context().polytope();
    let n = p.dim();
    let lp = LegendrePair::new(s.context().clone());
    let lo: Vec<f64> = (0..n)
        .map(|j| p.vertices().iter().map(|v| v[j]).min().unwrap() as f64)
        .collect();
    let hi: Vec<f64> = (0..n)
        .map(|j| p.vertices().iter().map(|v| v[j]).max().unwrap() as f64)
        .collect();
    let mut worst = 0.0f64;
    let mut idx = vec![0usize; n];
    loop {
        let x: Vec<f64> = (0..n)
            .map(|j| lo[j] + (idx[j] as f64 + 0.5) / per_axis as f64 * (hi[j] - lo[j]))
            .collect();
        if p.min_facet_value(&x) >= margin {
            let jac = s.y_jacobian_over_polytope(&lp, &x)?;
            let div: f64 = (0..n).map(|j| jac[j * n + j]).sum();
            worst = worst.max((div - lambda).abs());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(worst);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Both slope routes side by side.
#[derive(Debug, Clone)]
pub struct SlopeResult {
    pub divisor: Vec<i64>,
    pub quadrature: f64,
    pub topological: f64,
    pub volume: f64,
    pub facet_contributions: Vec<f64>,
}

pub fn slope_report(s: &LagrangianSection, opts: &QuadratureOptions) -> Result<SlopeResult> {
    let a = s
        .lift_divisor()
        .ok_or_else(|| Error::InvalidInput("section carries no divisor representative".into()))?
        .to_vec();
    let p = s.context().polytope();
    Ok(SlopeResult {
        quadrature: slope_quadrature(s, opts)?,
        topological: slope_topological(p, &a),
        volume: p.volume(),
        facet_contributions: facet_contributions(p, &a),
        divisor: a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricPotential;
    use crate::syz::transform;
    use crate::toric::fixtures::{cp1, cp2, hirzebruch1, p1xp1};

    fn ctx1() -> ToricPotential {
        ToricPotential::unit_weights(cp1()).unwrap()
    }

    fn ctx2() -> ToricPotential {
        ToricPotential::unit_weights(cp2()).unwrap()
    }

    #[test]
    fn topological_slopes() {
        assert!((slope_topological(&cp1(), &[1, 0]) - 1.0).abs() < 1e-12);
        assert_eq!(slope_topological(&cp1(), &[0, 0]), 0.0);
        assert!((slope_topological(&cp2(), &[1, 1, 1]) - 6.0).abs() < 1e-12);
        assert!((slope_topological(&p1xp1(), &[1, 1, 1, 1]) - 4.0).abs() < 1e-12);
        // hirzebruch: facet 1 has lattice length 2, volume 4
        assert!((slope_topological(&hirzebruch1(), &[1, 0, 0, 0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quadrature_slope_cp1() {
        let m = MetricPotential::guillemin(ctx1(), vec![1, 0]).unwrap();
        let s = transform(&m).unwrap();
        let q = slope_quadrature(&s, &QuadratureOptions::default()).unwrap();
        assert!((q - 1.0).abs() < 1e-3, "quadrature {q}");
    }

    #[test]
    fn quadrature_slope_zero_section() {
        let m = MetricPotential::guillemin(ctx1(), vec![0, 0]).unwrap();
        let s = transform(&m).unwrap();
        let q = slope_quadrature(&s, &QuadratureOptions::default()).unwrap();
        assert!(q.abs() < 1e-6);
    }

    #[test]
    fn quadrature_slope_cp2() {
        let m = MetricPotential::guillemin(ctx2(), vec![1, 1, 1]).unwrap();
        let s = transform(&m).unwrap();
        let q = slope_quadrature(&s, &QuadratureOptions::default()).unwrap();
        assert!((q - 6.0).abs() < 1e-3, "quadrature {q}");
    }

    #[test]
    fn harmonic_closed_forms() {
        let (c, u, l) = harmonic_closed_form(&ctx1(), &[1, 0]).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        assert!((u[0] + 1.0).abs() < 1e-12);
        assert!((l - 1.0).abs() < 1e-12);
        let (c, u, l) = harmonic_closed_form(&ctx2(), &[1, 1, 1]).unwrap();
        assert!((c - 3.0).abs() < 1e-12);
        assert!((u[0] + 1.0).abs() < 1e-12 && (u[1] + 1.0).abs() < 1e-12);
        assert!((l - 6.0).abs() < 1e-12);
        // inconsistent system on p1xp1
        let ctxp = ToricPotential::unit_weights(p1xp1()).unwrap();
        assert!(harmonic_closed_form(&ctxp, &[2, 0, 1, 0]).is_none());
    }

    #[test]
    fn harmonic_solver_cp1_matches_ansatz() {
        let ctx = ctx1();
        let sol = harmonic_solve(&ctx, &[1, 0], 8.0, 129).unwrap();
        assert!((sol.lambda - 1.0).abs() < 4e-3, "lambda {}", sol.lambda);
        // compare against c phi + u xi after affine gauge fixing
        let (c, u, _) = harmonic_closed_form(&ctx, &[1, 0]).unwrap();
        let exact = closed_form_section(&ctx, c, &u);
        let h = 16.0 / 128.0;
        let mut diffs = Vec::new();
        let mut xs = Vec::new();
        let mut i = -7.0;
        while i <= 7.0 {
            let g1 = sol.potential.value(&[i]).unwrap();
            let g2 = exact.potential().value(&[i]).unwrap();
            diffs.push(g1 - g2);
            xs.push(i);
            i += 0.25;
        }
        // remove best affine fit
        let ones = vec![1.0; xs.len()];
        let coef = lstsq_columns(&[ones, xs.clone()], &diffs).unwrap();
        let worst = xs
            .iter()
            .zip(&diffs)
            .map(|(x, d)| (d - coef[0] - coef[1] * x).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 5.0 * h * h, "gauge-fixed error {worst} vs {}", 5.0 * h * h);
    }

    #[test]
    fn harmonic_zero_divisor_is_trivial() {
        let ctx = ctx1();
        let sol = harmonic_solve(&ctx, &[0, 0], 8.0, 65).unwrap();
        assert!(sol.lambda.abs() < 1e-12);
        let worst = sol
            .correction
            .values()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-12, "correction max {worst}");
        // even resolutions are rejected
        assert!(harmonic_solve(&ctx, &[0, 0], 8.0, 64).is_err());
    }

    #[test]
    fn harmonic_solver_nontrivial_correction() {
        // Hirzebruch surface: no closed-form ansatz exists, the correction is
        // genuinely nonzero, and the solved slope must match the topological
        // one at discretization accuracy
        let ctx = ToricPotential::unit_weights(hirzebruch1()).unwrap();
        let a = vec![1i64, 0, 0, 0];
        assert!(harmonic_closed_form(&ctx, &a).is_none());
        let sol = harmonic_solve(&ctx, &a, 8.0, 65).unwrap();
        let want = slope_topological(ctx.polytope(), &a);
        assert!((want - 0.5).abs() < 1e-12);
        assert!((sol.lambda - want).abs() < 1e-2, "lambda {}", sol.lambda);
        assert!(sol.residual_rms < 0.1);
    }

    #[test]
    fn slag_zero_section_is_special() {
        let ctx = ctx1();
        let s = LagrangianSection::new(ctx, ScalarField::zero(1));
        let r = slag_residual(&s, 0.0, 101, 1e-2).unwrap();
        assert!(r.max_norm < 1e-14);
    }

    #[test]
    fn slag_linear_graph_with_matching_phase() {
        // y(x) = tan(theta) x + c has Im(e^{i theta}(1 - i y'(x))) = 0
        let ctx = ctx1();
        let theta = 0.35f64;
        let mut potential = ctx.phi_field().scale(theta.tan());
        potential.add_affine(&[0.8], 0.0);
        let s = LagrangianSection::new(ctx, potential);
        let r = slag_residual(&s, theta, 101, 1e-2).unwrap();
        assert!(r.max_norm < 1e-12, "max {}", r.max_norm);
    }

    #[test]
    fn fiber_rescale_identity_and_slope_linearity() {
        let m = MetricPotential::guillemin(ctx1(), vec![1, 0]).unwrap();
        let s = transform(&m).unwrap();
        let same = fiber_rescale(&s, 1.0);
        assert!(
            (same.potential().value(&[0.4]).unwrap() - s.potential().value(&[0.4]).unwrap())
                .abs()
                < 1e-15
        );
        // slope scales linearly; evaluate via the quadrature of div y with the
        // rescaled jacobian against epsilon times the original
        let lp = LegendrePair::new(ctx1());
        let eps = 0.37;
        let scaled = fiber_rescale(&s, eps);
        for x in [[0.2], [0.5], [0.83]] {
            let j1 = s.y_jacobian_over_polytope(&lp, &x).unwrap()[0];
            let j2 = scaled.y_jacobian_over_polytope(&lp, &x).unwrap()[0];
            assert!((j2 - eps * j1).abs() < 1e-12);
        }
    }

    #[test]
    fn rescaled_harmonic_satisfies_scaled_equation() {
        let ctx = ctx1();
        let (c, u, l) = harmonic_closed_form(&ctx, &[1, 0]).unwrap();
        let s = closed_form_section(&ctx, c, &u);
        let eps = 0.01;
        let scaled = fiber_rescale(&s, eps);
        let r = harmonic_residual_x(&scaled, eps * l, 101, 1e-2).unwrap();
        assert!(r < 1e-10, "residual {r}");
    }
}
