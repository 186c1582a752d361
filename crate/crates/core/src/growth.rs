//! Numerical verification of the asymptotic growth conditions that
//! characterize sections in the image of the transform, the class inference
//! they enable, and the closed-form stratified limit oracle for the
//! reference metric.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::kaehler::ToricPotential;
use crate::linalg::lstsq_columns;
use crate::syz::LagrangianSection;

/// Tail-fit window: samples at `t = -t0 - i dt`, `i = 0..m-1`.
#[derive(Debug, Clone, Copy)]
pub struct WindowSpec {
    pub t0: f64,
    pub dt: f64,
    pub m: usize,
}

/// Least-squares fit of `c0 + c1 e^{rate t}` on a window, with a convergence
/// verdict from window agreement.
#[derive(Debug, Clone)]
pub struct TailFit {
    pub c0: f64,
    pub c1: f64,
    pub rms: f64,
    pub window: WindowSpec,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct GrowthConfig {
    pub window: WindowSpec,
    /// Number of window positions compared for convergence; the extra
    /// windows sit shallower than `t0`, never deeper.
    pub shifts: usize,
    pub tol_fit: f64,
    pub tol_lim: f64,
    pub tol_match: f64,
    pub tol_zero: f64,
    pub seed: u64,
    /// Bound on inferred divisor entries.
    pub class_bound: i64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            window: WindowSpec {
                t0: 6.0,
                dt: 0.5,
                m: 8,
            },
            shifts: 3,
            tol_fit: 1e-7,
            tol_lim: 1e-6,
            tol_match: 1e-5,
            tol_zero: 1e-6,
            seed: 42,
            class_bound: 16,
        }
    }
}

/// Sample times, shallowest first: the first window starts
/// `(shifts-1) dt` above `t0`, the last window is exactly `[t0, t0+(m-1)dt]`.
fn sample_times(window: &WindowSpec, shifts: usize) -> Vec<f64> {
    let start = window.t0 - (shifts - 1) as f64 * window.dt;
    (0..window.m + shifts - 1)
        .map(|i| -(start + i as f64 * window.dt))
        .collect()
}

fn fit_window(ts: &[f64], ys: &[f64], rate: f64) -> Result<(f64, f64, f64)> {
    let ones = vec![1.0; ts.len()];
    let decays: Vec<f64> = ts.iter().map(|&t| (rate * t).exp()).collect();
    let sol = lstsq_columns(&[ones, decays.clone()], ys)?;
    let mut ss = 0.0;
    for ((&y, &d), _) in ys.iter().zip(&decays).zip(ts) {
        let r = y - sol[0] - sol[1] * d;
        ss += r * r;
    }
    Ok((sol[0], sol[1], (ss / ts.len() as f64).sqrt()))
}

fn fit_tail_samples(
    ts: &[f64],
    ys: &[f64],
    window: &WindowSpec,
    shifts: usize,
    rate: f64,
    tol_fit: f64,
    tol_lim: f64,
) -> Result<TailFit> {
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Diverging("non-finite sample".into()));
    }
    let m = window.m;
    let mut fits = Vec::with_capacity(shifts);
    for s in 0..shifts {
        fits.push(fit_window(&ts[s..s + m], &ys[s..s + m], rate)?);
    }
    let (c0, c1, rms) = fits[shifts - 1];
    let agree = if shifts >= 2 {
        (c0 - fits[shifts - 2].0).abs() <= tol_lim
    } else {
        true
    };
    if rms <= tol_fit && agree {
        return Ok(TailFit {
            c0,
            c1,
            rms,
            window: *window,
            converged: true,
        });
    }
    if rms <= tol_fit {
        // fit is clean but the window-shifted estimates still move
        return Ok(TailFit {
            c0,
            c1,
            rms,
            window: *window,
            converged: false,
        });
    }
    // classify the failure: magnitudes growing toward -infinity mean divergence
    let mags: Vec<f64> = ys.iter().map(|y| y.abs()).collect();
    let monotone_growth = mags
        .windows(2)
        .all(|w| w[1] >= w[0] * (1.0 - 1e-12) - 1e-12)
        && mags[mags.len() - 1] > mags[0] + 10.0 * tol_lim;
    if monotone_growth {
        Err(Error::Diverging(format!(
            "|f| grows from {} to {} across the window",
            mags[0],
            mags[mags.len() - 1]
        )))
    } else {
        Err(Error::Oscillating(format!(
            "fit rms {} above tolerance {}",
            rms, tol_fit
        )))
    }
}

/// Fit `c0 + c1 e^{2t}` on the window, requiring window-shift agreement.
pub fn tail_limit(
    sampler: impl Fn(f64) -> Result<f64>,
    t0: f64,
    dt: f64,
    m: usize,
) -> Result<TailFit> {
    let window = WindowSpec { t0, dt, m };
    let shifts = 3;
    let ts = sample_times(&window, shifts);
    let mut ys = Vec::with_capacity(ts.len());
    for &t in &ts {
        ys.push(sampler(t)?);
    }
    fit_tail_samples(
        &ts,
        &ys,
        &window,
        shifts,
        2.0,
        GrowthConfig::default().tol_fit,
        GrowthConfig::default().tol_lim,
    )
}

/// `xi(t) = sum_j t_j v_{sigma(j)}` for a maximal cone's generators.
pub fn cone_coords(gens: &[Vec<f64>], t: &[f64]) -> Vec<f64> {
    let n = gens[0].len();
    let mut xi = vec![0.0; n];
    for (tm, v) in t.iter().zip(gens) {
        for j in 0..n {
            xi[j] += tm * v[j];
        }
    }
    xi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// One per-cone, per-condition check outcome.
#[derive(Debug, Clone)]
pub struct CheckEntry {
    pub cone: usize,
    pub condition: u8,
    /// Direction positions within the cone: (j, k, l) as applicable.
    pub dirs: [usize; 3],
    pub frozen_config: usize,
    pub limit_lhs: Option<f64>,
    pub limit_rhs: Option<f64>,
    pub residual: f64,
    pub verdict: Verdict,
    pub note: String,
}

/// All per-cone, per-condition verdicts for one divisor representative.
///
/// Condition-1 limits are reported on the first-order scale (the factor-2
/// convention of the defining inequalities is divided out), so a passing
/// entry's `limit_lhs`/`limit_rhs` equal the closed-form oracle value.
#[derive(Debug, Clone)]
pub struct GrowthReport {
    pub divisor: Vec<i64>,
    pub entries: Vec<CheckEntry>,
}

impl GrowthReport {
    pub fn no_failures(&self) -> bool {
        self.entries.iter().all(|e| e.verdict != Verdict::Fail)
    }

    pub fn conclusive(&self) -> bool {
        self.entries.iter().all(|e| e.verdict != Verdict::Inconclusive)
    }

    /// Strict pass: every entry checked and passed.
    pub fn pass(&self) -> bool {
        self.no_failures() && self.conclusive()
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for e in &self.entries {
            match e.verdict {
                Verdict::Pass => c.0 += 1,
                Verdict::Fail => c.1 += 1,
                Verdict::Inconclusive => c.2 += 1,
            }
        }
        c
    }
}

/// Frozen-coordinate configurations: all zeros and one seeded random vector
/// in `[-1, 1]^n`. Both must pass.
fn frozen_configs(n: usize, seed: u64) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![0.0]];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    vec![vec![0.0; n], random]
}

struct ConeChecker<'a> {
    potential: &'a ScalarField,
    gens: Vec<Vec<f64>>,
    /// Divisor entries aligned with the cone generator positions.
    a_vals: Vec<f64>,
    cone: usize,
}

impl<'a> ConeChecker<'a> {
    fn xi(&self, t: &[f64]) -> Vec<f64> {
        cone_coords(&self.gens, t)
    }

    fn window_points(&self, ts: &[f64], frozen: &[f64], limiting: &[usize]) -> Vec<Vec<f64>> {
        ts.iter()
            .map(|&t| {
                let mut tv = frozen.to_vec();
                for &j in limiting {
                    tv[j] = t;
                }
                self.xi(&tv)
            })
            .collect()
    }

    fn covered(&self, points: &[Vec<f64>]) -> bool {
        points.iter().all(|p| self.potential.contains(p))
    }

    fn entry(
        &self,
        condition: u8,
        dirs: [usize; 3],
        frozen_config: usize,
        verdict: Verdict,
        lhs: Option<f64>,
        rhs: Option<f64>,
        residual: f64,
        note: impl Into<String>,
    ) -> CheckEntry {
        CheckEntry {
            cone: self.cone,
            condition,
            dirs,
            frozen_config,
            limit_lhs: lhs,
            limit_rhs: rhs,
            residual,
            verdict,
            note: note.into(),
        }
    }

    /// Condition 1 along direction `j`: the first-order and Hessian
    /// quantities (normalized to first-order scale) must converge to a
    /// shared limit.
    fn condition1(
        &self,
        cfg: &GrowthConfig,
        frozen: &[f64],
        fi: usize,
        j: usize,
        out: &mut Vec<CheckEntry>,
    ) {
        let ts = sample_times(&cfg.window, cfg.shifts);
        let points = self.window_points(&ts, frozen, &[j]);
        if !self.covered(&points) {
            out.push(self.entry(
                1,
                [j, 0, 0],
                fi,
                Verdict::Inconclusive,
                None,
                None,
                0.0,
                "window exceeds the potential's grid box",
            ));
            return;
        }
        let v = &self.gens[j];
        let aj = self.a_vals[j];
        let mut ys_a = Vec::with_capacity(ts.len());
        let mut ys_b = Vec::with_capacity(ts.len());
        for (t, p) in ts.iter().zip(&points) {
            let decay = (-2.0 * t).exp();
            match (self.potential.grad_pair(p, v), self.potential.hess_quad(p, v, v)) {
                (Ok(gp), Ok(hq)) => {
                    ys_a.push(decay * (gp + aj));
                    ys_b.push(decay * hq / 2.0);
                }
                (Err(e), _) | (_, Err(e)) => {
                    out.push(self.entry(
                        1,
                        [j, 0, 0],
                        fi,
                        Verdict::Fail,
                        None,
                        None,
                        f64::INFINITY,
                        format!("evaluation error: {e}"),
                    ));
                    return;
                }
            }
        }
        let fit_a = fit_tail_samples(
            &ts, &ys_a, &cfg.window, cfg.shifts, 2.0, cfg.tol_fit, cfg.tol_lim,
        );
        let fit_b = fit_tail_samples(
            &ts, &ys_b, &cfg.window, cfg.shifts, 2.0, cfg.tol_fit, cfg.tol_lim,
        );
        match (fit_a, fit_b) {
            (Ok(fa), Ok(fb)) if fa.converged && fb.converged => {
                let residual = (fa.c0 - fb.c0).abs();
                let verdict = if residual <= cfg.tol_match {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                };
                out.push(self.entry(
                    1,
                    [j, 0, 0],
                    fi,
                    verdict,
                    Some(fa.c0),
                    Some(fb.c0),
                    residual,
                    if verdict == Verdict::Pass {
                        String::new()
                    } else {
                        "limits differ".into()
                    },
                ));
            }
            (Ok(fa), Ok(fb)) => {
                out.push(self.entry(
                    1,
                    [j, 0, 0],
                    fi,
                    Verdict::Fail,
                    Some(fa.c0),
                    Some(fb.c0),
                    (fa.c0 - fb.c0).abs(),
                    "tail fit did not converge",
                ));
            }
            (ra, rb) => {
                let msg = match (&ra, &rb) {
                    (Err(e), _) => e.to_string(),
                    (_, Err(e)) => e.to_string(),
                    _ => unreachable!(),
                };
                out.push(self.entry(
                    1,
                    [j, 0, 0],
                    fi,
                    Verdict::Fail,
                    ra.ok().map(|f| f.c0),
                    rb.ok().map(|f| f.c0),
                    f64::INFINITY,
                    msg,
                ));
            }
        }
    }

    /// Condition 2: every Hessian pairing has a limit along every direction.
    fn condition2(
        &self,
        cfg: &GrowthConfig,
        frozen: &[f64],
        fi: usize,
        j: usize,
        k: usize,
        l: usize,
        out: &mut Vec<CheckEntry>,
    ) {
        let ts = sample_times(&cfg.window, cfg.shifts);
        let points = self.window_points(&ts, frozen, &[l]);
        if !self.covered(&points) {
            out.push(self.entry(
                2,
                [j, k, l],
                fi,
                Verdict::Inconclusive,
                None,
                None,
                0.0,
                "window exceeds the potential's grid box",
            ));
            return;
        }
        let mut ys = Vec::with_capacity(ts.len());
        for p in &points {
            match self.potential.hess_quad(p, &self.gens[j], &self.gens[k]) {
                Ok(v) => ys.push(v),
                Err(e) => {
                    out.push(self.entry(
                        2,
                        [j, k, l],
                        fi,
                        Verdict::Fail,
                        None,
                        None,
                        f64::INFINITY,
                        format!("evaluation error: {e}"),
                    ));
                    return;
                }
            }
        }
        match fit_tail_samples(
            &ts, &ys, &cfg.window, cfg.shifts, 2.0, cfg.tol_fit, cfg.tol_lim,
        ) {
            Ok(f) if f.converged => out.push(self.entry(
                2,
                [j, k, l],
                fi,
                Verdict::Pass,
                Some(f.c0),
                None,
                f.rms,
                "",
            )),
            Ok(f) => out.push(self.entry(
                2,
                [j, k, l],
                fi,
                Verdict::Fail,
                Some(f.c0),
                None,
                f.rms,
                "no stable limit",
            )),
            Err(e) => out.push(self.entry(
                2,
                [j, k, l],
                fi,
                Verdict::Fail,
                None,
                None,
                f64::INFINITY,
                e.to_string(),
            )),
        }
    }

    /// Condition 3 for distinct `j, k`: `e^{-t_j - t_k} (v_j^T H v_k)` goes
    /// to zero. Verified by a fit along the diagonal path plus one-variable
    /// decay guards.
    fn condition3(
        &self,
        cfg: &GrowthConfig,
        frozen: &[f64],
        fi: usize,
        j: usize,
        k: usize,
        out: &mut Vec<CheckEntry>,
    ) {
        let ts = sample_times(&cfg.window, cfg.shifts);
        let diag_points = self.window_points(&ts, frozen, &[j, k]);
        let single_j = self.window_points(&ts, frozen, &[j]);
        let single_k = self.window_points(&ts, frozen, &[k]);
        if !self.covered(&diag_points) || !self.covered(&single_j) || !self.covered(&single_k) {
            out.push(self.entry(
                3,
                [j, k, 0],
                fi,
                Verdict::Inconclusive,
                None,
                None,
                0.0,
                "window exceeds the potential's grid box",
            ));
            return;
        }
        let quad = |p: &[f64]| self.potential.hess_quad(p, &self.gens[j], &self.gens[k]);
        let mut ys = Vec::with_capacity(ts.len());
        for (t, p) in ts.iter().zip(&diag_points) {
            match quad(p) {
                Ok(v) => ys.push((-2.0 * t).exp() * v),
                Err(e) => {
                    out.push(self.entry(
                        3,
                        [j, k, 0],
                        fi,
                        Verdict::Fail,
                        None,
                        None,
                        f64::INFINITY,
                        format!("evaluation error: {e}"),
                    ));
                    return;
                }
            }
        }
        let diag_fit = fit_tail_samples(
            &ts, &ys, &cfg.window, cfg.shifts, 2.0, cfg.tol_fit, cfg.tol_lim,
        );
        // one-variable guard: |e^{-t_j - t_k} v_j^T H v_k| must not grow as
        // either coordinate goes deep with the other frozen
        let mut guard_ok = true;
        for (limiting, pts) in [(j, &single_j), (k, &single_k)] {
            let mut prev = f64::INFINITY;
            for (t, p) in ts.iter().zip(pts) {
                let other = if limiting == j { k } else { j };
                let tk = frozen[other];
                let val = match quad(p) {
                    Ok(v) => ((-t - tk).exp() * v).abs(),
                    Err(_) => {
                        guard_ok = false;
                        break;
                    }
                };
                if val > prev * (1.0 + 1e-6) + 1e-9 {
                    guard_ok = false;
                    break;
                }
                prev = val;
            }
        }
        match diag_fit {
            Ok(f) if f.converged && f.c0.abs() <= cfg.tol_zero && guard_ok => {
                out.push(self.entry(3, [j, k, 0], fi, Verdict::Pass, Some(f.c0), None, f.rms, ""))
            }
            Ok(f) => {
                let note = if !guard_ok {
                    "one-variable decay guard failed"
                } else if !f.converged {
                    "no stable limit"
                } else {
                    "limit not zero"
                };
                out.push(self.entry(
                    3,
                    [j, k, 0],
                    fi,
                    Verdict::Fail,
                    Some(f.c0),
                    None,
                    f.c0.abs(),
                    note,
                ));
            }
            Err(e) => out.push(self.entry(
                3,
                [j, k, 0],
                fi,
                Verdict::Fail,
                None,
                None,
                f64::INFINITY,
                e.to_string(),
            )),
        }
    }

    fn run(&self, cfg: &GrowthConfig, out: &mut Vec<CheckEntry>) {
        let n = self.gens.len();
        for (fi, frozen) in frozen_configs(n, cfg.seed).iter().enumerate() {
            for j in 0..n {
                self.condition1(cfg, frozen, fi, j, out);
            }
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        self.condition2(cfg, frozen, fi, j, k, l, out);
                    }
                }
            }
            for j in 0..n {
                for k in j + 1..n {
                    self.condition3(cfg, frozen, fi, j, k, out);
                }
            }
        }
    }
}

/// Check the growth conditions of a section's lift against a divisor
/// representative, cone by cone.
pub fn check_growth(
    s: &LagrangianSection,
    a: &[i64],
    cfg: &GrowthConfig,
) -> Result<GrowthReport> {
    let fan = s.context().polytope().fan();
    if a.len() != fan.ray_count() {
        return Err(Error::InvalidInput(format!(
            "divisor has {} entries, expected {}",
            a.len(),
            fan.ray_count()
        )));
    }
    let mut entries = Vec::new();
    for (ci, cone) in fan.max_cones().iter().enumerate() {
        let gens: Vec<Vec<f64>> = cone
            .iter()
            .map(|&gi| fan.generator(gi).iter().map(|&v| v as f64).collect())
            .collect();
        let a_vals: Vec<f64> = cone.iter().map(|&gi| a[gi] as f64).collect();
        let checker = ConeChecker {
            potential: s.potential(),
            gens,
            a_vals,
            cone: ci,
        };
        checker.run(cfg, &mut entries);
    }
    Ok(GrowthReport {
        divisor: a.to_vec(),
        entries,
    })
}

/// Extendability of a scalar field over the standard chart: the growth
/// conditions with zero divisor along the coordinate directions.
pub fn extendability_check(f: &ScalarField, cfg: &GrowthConfig) -> Result<GrowthReport> {
    let n = f.dim();
    let gens: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let checker = ConeChecker {
        potential: f,
        gens,
        a_vals: vec![0.0; n],
        cone: 0,
    };
    let mut entries = Vec::new();
    checker.run(cfg, &mut entries);
    Ok(GrowthReport {
        divisor: vec![0; n],
        entries,
    })
}

/// One boundary-limit estimate along a ray.
#[derive(Debug, Clone)]
pub struct RayEstimate {
    pub ray: usize,
    /// Fitted limit of `<y(t v_i), v_i>`, when the fit stabilized.
    pub limit: Option<f64>,
    pub rounded: Option<i64>,
    pub note: String,
}

/// Detailed outcome of class inference.
#[derive(Debug, Clone)]
pub struct InferReport {
    pub rays: Vec<RayEstimate>,
    pub divisor: Option<Vec<i64>>,
    pub growth: Option<GrowthReport>,
}

/// Estimate the divisor representative from ray boundary limits, then verify
/// it with the full growth check. `None` when no representative works.
pub fn infer_class(
    s: &LagrangianSection,
    cfg: &GrowthConfig,
) -> Result<Option<(Vec<i64>, GrowthReport)>> {
    let rep = infer_class_report(s, cfg)?;
    match (rep.divisor, rep.growth) {
        (Some(a), Some(g)) if g.no_failures() => Ok(Some((a, g))),
        _ => Ok(None),
    }
}

pub fn infer_class_report(s: &LagrangianSection, cfg: &GrowthConfig) -> Result<InferReport> {
    let fan = s.context().polytope().fan();
    let d = fan.ray_count();
    let mut rays = Vec::with_capacity(d);
    let mut divisor = Vec::with_capacity(d);
    let mut all_ok = true;
    for i in 0..d {
        let v: Vec<f64> = fan.generator(i).iter().map(|&x| x as f64).collect();
        let est = estimate_ray_limit(s, &v, cfg);
        match est {
            Ok(Some(c0)) => {
                let ai = (-c0).round();
                if (c0 + ai).abs() > 0.1 {
                    rays.push(RayEstimate {
                        ray: i,
                        limit: Some(c0),
                        rounded: None,
                        note: format!("limit {} is {} from the nearest integer", c0, (c0 + ai).abs()),
                    });
                    all_ok = false;
                } else if ai.abs() > cfg.class_bound as f64 {
                    rays.push(RayEstimate {
                        ray: i,
                        limit: Some(c0),
                        rounded: None,
                        note: format!("entry {} exceeds the class bound {}", ai, cfg.class_bound),
                    });
                    all_ok = false;
                } else {
                    rays.push(RayEstimate {
                        ray: i,
                        limit: Some(c0),
                        rounded: Some(ai as i64),
                        note: String::new(),
                    });
                    divisor.push(ai as i64);
                }
            }
            Ok(None) => {
                rays.push(RayEstimate {
                    ray: i,
                    limit: None,
                    rounded: None,
                    note: "ray window not covered by the potential's domain".into(),
                });
                all_ok = false;
            }
            Err(e) => {
                rays.push(RayEstimate {
                    ray: i,
                    limit: None,
                    rounded: None,
                    note: e.to_string(),
                });
                all_ok = false;
            }
        }
    }
    if !all_ok {
        return Ok(InferReport {
            rays,
            divisor: None,
            growth: None,
        });
    }
    let growth = check_growth(s, &divisor, cfg)?;
    let ok = growth.no_failures();
    Ok(InferReport {
        rays,
        divisor: if ok { Some(divisor) } else { None },
        growth: Some(growth),
    })
}

/// Fit `<y(t v), v>` along the ray `t -> -infinity`. The window clamps to the
/// potential's evaluable domain; estimation only needs the rounding
/// tolerance, far looser than the growth tolerances.
fn estimate_ray_limit(
    s: &LagrangianSection,
    v: &[f64],
    cfg: &GrowthConfig,
) -> Result<Option<f64>> {
    let mut window = cfg.window;
    let depth = window.t0 + (window.m - 1) as f64 * window.dt;
    let point_at = |t: f64| -> Vec<f64> { v.iter().map(|&c| c * t).collect() };
    if !s.potential().contains(&point_at(-depth)) {
        // clamp to the deepest window the domain can host
        let mut tau = depth;
        while tau > 0.0 && !s.potential().contains(&point_at(-tau)) {
            tau -= window.dt;
        }
        let t0_eff = tau - (window.m - 1) as f64 * window.dt;
        if t0_eff < 2.0 {
            return Ok(None);
        }
        window.t0 = t0_eff.min(window.t0);
    }
    let ts = sample_times(&window, cfg.shifts);
    // the shallow shift windows may still exceed a tight box on the shallow
    // side only for tiny boxes; re-check
    if ts.iter().any(|&t| !s.potential().contains(&point_at(t))) {
        return Ok(None);
    }
    let mut ys = Vec::with_capacity(ts.len());
    for &t in &ts {
        let p = point_at(t);
        let y = s.potential().grad_pair(&p, v)?;
        ys.push(y);
    }
    let fit = fit_tail_samples(&ts, &ys, &window, cfg.shifts, 2.0, 1e-3, 0.02)?;
    if fit.converged {
        Ok(Some(fit.c0))
    } else {
        Err(Error::Oscillating(
            "ray limit estimates did not stabilize".into(),
        ))
    }
}

/// Stratified sums of the reference-metric tail expansion for one cone
/// direction: `b_u = c_u exp(2 sum_{m != k} l_{sigma(m)}(u) t_m)` grouped by
/// `l_{sigma(k)}(u) = 0, 1, 2` plus the per-divisor `l_i`-weighted strata.
struct StrataSums {
    s0: f64,
    s1: f64,
    s2: f64,
    ti0: Vec<f64>,
    ti1: Vec<f64>,
}

fn strata_sums(
    ctx: &ToricPotential,
    cone: &[usize],
    k_pos: usize,
    frozen: &[f64],
) -> Result<StrataSums> {
    let p = ctx.polytope();
    let d = p.fan().ray_count();
    let ik = cone[k_pos];
    // log b_u with a common max shift
    let mut logb = Vec::with_capacity(ctx.support().len());
    let mut lmax = f64::NEG_INFINITY;
    for (u, &cu) in ctx.support().iter().zip(ctx.weights()) {
        let mut e = cu.ln();
        for (m, &gi) in cone.iter().enumerate() {
            if m != k_pos {
                e += 2.0 * frozen[m] * p.facet_fn_int(gi, u) as f64;
            }
        }
        logb.push(e);
        lmax = lmax.max(e);
    }
    let mut sums = StrataSums {
        s0: 0.0,
        s1: 0.0,
        s2: 0.0,
        ti0: vec![0.0; d],
        ti1: vec![0.0; d],
    };
    for (u, &lb) in ctx.support().iter().zip(&logb) {
        let b = (lb - lmax).exp();
        let lk = p.facet_fn_int(ik, u);
        match lk {
            0 => sums.s0 += b,
            1 => sums.s1 += b,
            2 => sums.s2 += b,
            _ => {}
        }
        for i in 0..d {
            let li = p.facet_fn_int(i, u);
            if li >= 1 {
                if lk == 0 {
                    sums.ti0[i] += li as f64 * b;
                }
                if lk == 1 {
                    sums.ti1[i] += li as f64 * b;
                }
            }
        }
    }
    Ok(sums)
}

/// Closed-form limit of `e^{-2 t_k} (<dg_{h0}, v_k> + a_k)` along the `k`-th
/// direction of a maximal cone, at the given frozen coordinates.
pub fn guillemin_tail_limit(
    ctx: &ToricPotential,
    a: &[i64],
    cone_idx: usize,
    k_pos: usize,
    frozen: &[f64],
) -> Result<f64> {
    let p = ctx.polytope();
    let cone = &p.fan().max_cones()[cone_idx];
    let ik = cone[k_pos];
    let sums = strata_sums(ctx, cone, k_pos, frozen)?;
    if sums.s1 == 0.0 {
        return Err(Error::EmptyStratum(format!(
            "no support point with l_{}(u) = 1",
            ik + 1
        )));
    }
    let total: f64 = a.iter().map(|&x| x as f64).sum();
    let mut value = total * sums.s1 / sums.s0;
    for (i, &ai) in a.iter().enumerate() {
        if i == ik || ai == 0 {
            continue;
        }
        if sums.ti0[i] == 0.0 {
            return Err(Error::EmptyStratum(format!(
                "no support point with l_{}(u) = 0 and l_{}(u) >= 1",
                ik + 1,
                i + 1
            )));
        }
        value -= ai as f64 * sums.ti1[i] / sums.ti0[i];
    }
    value -= 2.0 * a[ik] as f64 * sums.s2 / sums.s1;
    Ok(value)
}

/// Closed-form limit of `e^{-2 t_k} (v_k^T Hess(g_{h0}) v_k)`: exactly twice
/// the first-order limit, written out from its own expression.
pub fn guillemin_hessian_tail_limit(
    ctx: &ToricPotential,
    a: &[i64],
    cone_idx: usize,
    k_pos: usize,
    frozen: &[f64],
) -> Result<f64> {
    let p = ctx.polytope();
    let cone = &p.fan().max_cones()[cone_idx];
    let ik = cone[k_pos];
    let sums = strata_sums(ctx, cone, k_pos, frozen)?;
    if sums.s1 == 0.0 {
        return Err(Error::EmptyStratum(format!(
            "no support point with l_{}(u) = 1",
            ik + 1
        )));
    }
    let total: f64 = a.iter().map(|&x| x as f64).sum();
    let mut value = 2.0 * total * sums.s1 / sums.s0;
    for (i, &ai) in a.iter().enumerate() {
        if i == ik || ai == 0 {
            continue;
        }
        if sums.ti0[i] == 0.0 {
            return Err(Error::EmptyStratum(format!(
                "no support point with l_{}(u) = 0 and l_{}(u) >= 1",
                ik + 1,
                i + 1
            )));
        }
        value -= 2.0 * ai as f64 * sums.ti1[i] / sums.ti0[i];
    }
    value -= 4.0 * a[ik] as f64 * sums.s2 / sums.s1;
    Ok(value)
}
