//! Integer-lattice layer: fans, moment polytopes, facet functions, lattice
//! points, the divisor-class quotient and the superpotential.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{solve_dense, Complex};

/// A smooth complete fan in `N ≅ Z^n`, given by the primitive generators of
/// its rays and the index sets of its maximal cones (0-based internally).
#[derive(Debug, Clone, PartialEq)]
pub struct Fan {
    dim: usize,
    generators: Vec<Vec<i64>>,
    max_cones: Vec<Vec<usize>>,
}

/// Per-check verdicts from `Fan::validate`.
#[derive(Debug, Clone)]
pub struct FanReport {
    pub primitive: Vec<bool>,
    pub cone_unimodular: Vec<bool>,
    pub generators_covered: bool,
    pub complete: bool,
}

impl FanReport {
    pub fn is_valid(&self) -> bool {
        self.primitive.iter().all(|&b| b)
            && self.cone_unimodular.iter().all(|&b| b)
            && self.generators_covered
            && self.complete
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Integer determinant by fraction-free elimination (Bareiss).
fn det_int(rows: &[Vec<i64>]) -> i128 {
    let n = rows.len();
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let swap = (k + 1..n).find(|&i| m[i][k] != 0);
            match swap {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

impl Fan {
    pub fn new(dim: usize, generators: Vec<Vec<i64>>, max_cones: Vec<Vec<usize>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::MalformedFan("dimension must be positive".into()));
        }
        if generators.is_empty() {
            return Err(Error::MalformedFan("no generators".into()));
        }
        if max_cones.is_empty() {
            return Err(Error::MalformedFan("no maximal cones".into()));
        }
        for (i, v) in generators.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::MalformedFan(format!(
                    "generator {} has length {}, expected {}",
                    i + 1,
                    v.len(),
                    dim
                )));
            }
            if v.iter().all(|&c| c == 0) {
                return Err(Error::MalformedFan(format!("generator {} is zero", i + 1)));
            }
            for (j, w) in generators.iter().enumerate().skip(i + 1) {
                if v == w {
                    return Err(Error::MalformedFan(format!(
                        "duplicate generators {} and {}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        for (c, cone) in max_cones.iter().enumerate() {
            if cone.len() != dim {
                return Err(Error::MalformedFan(format!(
                    "maximal cone {} has {} generators, expected {}",
                    c + 1,
                    cone.len(),
                    dim
                )));
            }
            let mut seen = cone.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != cone.len() {
                return Err(Error::MalformedFan(format!(
                    "maximal cone {} repeats a generator index",
                    c + 1
                )));
            }
            for &i in cone {
                if i >= generators.len() {
                    return Err(Error::MalformedFan(format!(
                        "maximal cone {} references generator {} out of range",
                        c + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            generators,
            max_cones,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ray_count(&self) -> usize {
        self.generators.len()
    }

    pub fn generator(&self, i: usize) -> &[i64] {
        &self.generators[i]
    }

    pub fn generators(&self) -> &[Vec<i64>] {
        &self.generators
    }

    pub fn max_cones(&self) -> &[Vec<usize>] {
        &self.max_cones
    }

    /// Smoothness, primitivity and completeness verdicts.
    ///
    /// Completeness is exact for n <= 2 (cyclic angle cover); in higher
    /// dimension it is a cover test on fixed-seed pseudo-random directions.
    pub fn validate(&self) -> FanReport {
        let primitive = self
            .generators
            .iter()
            .map(|v| v.iter().fold(0, |g, &c| gcd(g, c)) == 1)
            .collect();
        let cone_unimodular = self
            .max_cones
            .iter()
            .map(|cone| {
                let rows: Vec<Vec<i64>> =
                    cone.iter().map(|&i| self.generators[i].clone()).collect();
                det_int(&rows).abs() == 1
            })
            .collect();
        let mut used = vec![false; self.generators.len()];
        for cone in &self.max_cones {
            for &i in cone {
                used[i] = true;
            }
        }
        let generators_covered = used.iter().all(|&b| b);
        let complete = match self.dim {
            1 => self.complete_dim1(),
            2 => self.complete_dim2(),
            _ => self.complete_sampled(),
        };
        FanReport {
            primitive,
            cone_unimodular,
            generators_covered,
            complete,
        }
    }

    pub fn ensure_valid(&self) -> Result<FanReport> {
        let report = self.validate();
        if report.is_valid() {
            Ok(report)
        } else {
            Err(Error::MalformedFan(format!(
                "fan failed validation: primitive={:?} unimodular={:?} covered={} complete={}",
                report.primitive, report.cone_unimodular, report.generators_covered, report.complete
            )))
        }
    }

    fn complete_dim1(&self) -> bool {
        let has_pos = self
            .max_cones
            .iter()
            .any(|c| self.generators[c[0]][0] > 0);
        let has_neg = self
            .max_cones
            .iter()
            .any(|c| self.generators[c[0]][0] < 0);
        has_pos && has_neg
    }

    fn complete_dim2(&self) -> bool {
        let d = self.generators.len();
        if d < 3 {
            return false;
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            let ta = (self.generators[a][1] as f64).atan2(self.generators[a][0] as f64);
            let tb = (self.generators[b][1] as f64).atan2(self.generators[b][0] as f64);
            ta.partial_cmp(&tb).unwrap()
        });
        // adjacent pairs in cyclic angular order must be exactly the maximal cones
        let mut expected: Vec<(usize, usize)> = (0..d)
            .map(|k| {
                let a = order[k];
                let b = order[(k + 1) % d];
                (a.min(b), a.max(b))
            })
            .collect();
        expected.sort_unstable();
        let mut actual: Vec<(usize, usize)> = self
            .max_cones
            .iter()
            .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
            .collect();
        actual.sort_unstable();
        if expected != actual {
            return false;
        }
        // each consecutive pair must span a salient sector in the forward direction
        (0..d).all(|k| {
            let a = &self.generators[order[k]];
            let b = &self.generators[order[(k + 1) % d]];
            (a[0] as i128) * (b[1] as i128) - (a[1] as i128) * (b[0] as i128) > 0
        })
    }

    fn complete_sampled(&self) -> bool {
        let n = self.dim;
        let samples = 10usize.pow(n as u32);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        'dir: for _ in 0..samples {
            let mut x = vec![0.0; n];
            let mut norm = 0.0;
            while norm < 1e-6 {
                for xi in x.iter_mut() {
                    *xi = rng.gen_range(-1.0..1.0);
                }
                norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            }
            for cone in &self.max_cones {
                if self.cone_contains(cone, &x) {
                    continue 'dir;
                }
            }
            return false;
        }
        true
    }

    /// Whether `x = sum alpha_i v_i` with all `alpha_i >= -1e-9`.
    pub fn cone_contains(&self, cone: &[usize], x: &[f64]) -> bool {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for (col, &gi) in cone.iter().enumerate() {
            for row in 0..n {
                m[row * n + col] = self.generators[gi][row] as f64;
            }
        }
        let mut b = x.to_vec();
        if solve_dense(&mut m, n, &mut b).is_err() {
            return false;
        }
        b.iter().all(|&a| a >= -1e-9)
    }
}

/// The moment polytope `{x : <x, v_i> + lambda_i >= 0}` of an ample divisor,
/// with vertices, lattice measures and facet evaluators precomputed.
#[derive(Debug, Clone)]
pub struct Polytope {
    fan: Fan,
    offsets: Vec<i64>,
    vertices: Vec<Vec<i64>>,
    lattice_points: Vec<Vec<i64>>,
    facet_volumes: Vec<f64>,
    volume: f64,
}

impl Polytope {
    pub fn from_fan(fan: Fan, offsets: Vec<i64>) -> Result<Self> {
        fan.ensure_valid()?;
        if offsets.len() != fan.ray_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} offsets, got {}",
                fan.ray_count(),
                offsets.len()
            )));
        }
        let n = fan.dim();
        let mut vertices = Vec::with_capacity(fan.max_cones().len());
        for cone in fan.max_cones() {
            vertices.push(cone_vertex(&fan, &offsets, cone)?);
        }
        // dual position: vertices distinct, contained, and strictly off foreign facets
        for (ci, v) in vertices.iter().enumerate() {
            for (cj, w) in vertices.iter().enumerate().skip(ci + 1) {
                if v == w {
                    return Err(Error::NotAmple(format!(
                        "cones {} and {} give the same vertex {:?}",
                        ci + 1,
                        cj + 1,
                        v
                    )));
                }
            }
            for i in 0..fan.ray_count() {
                let li = facet_value_int(&fan, &offsets, i, v);
                let in_cone = fan.max_cones()[ci].contains(&i);
                if in_cone && li != 0 {
                    return Err(Error::NotAmple(format!(
                        "vertex of cone {} misses facet {}",
                        ci + 1,
                        i + 1
                    )));
                }
                if !in_cone && li <= 0 {
                    return Err(Error::NotAmple(format!(
                        "vertex of cone {} violates facet {} (l = {})",
                        ci + 1,
                        i + 1,
                        li
                    )));
                }
            }
        }
        // interior point check at the vertex centroid
        let centroid: Vec<f64> = (0..n)
            .map(|j| {
                vertices.iter().map(|v| v[j] as f64).sum::<f64>() / vertices.len() as f64
            })
            .collect();
        for i in 0..fan.ray_count() {
            let mut l = offsets[i] as f64;
            for j in 0..n {
                l += centroid[j] * fan.generator(i)[j] as f64;
            }
            if l <= 0.0 {
                return Err(Error::NotAmple(format!(
                    "empty interior: centroid fails facet {}",
                    i + 1
                )));
            }
        }
        let lattice_points = enumerate_lattice_points(&fan, &offsets, &vertices, 1);
        let volume = ehrhart_volume(&fan, &offsets, &vertices)?;
        let facet_volumes = (0..fan.ray_count())
            .map(|i| ehrhart_facet_volume(&fan, &offsets, &vertices, i))
            .collect::<Result<Vec<_>>>()?;
        if facet_volumes.iter().any(|&v| v < 0.5) {
            return Err(Error::NotAmple("a facet has no lattice extent".into()));
        }
        Ok(Self {
            fan,
            offsets,
            vertices,
            lattice_points,
            facet_volumes,
            volume,
        })
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn dim(&self) -> usize {
        self.fan.dim()
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn vertices(&self) -> &[Vec<i64>] {
        &self.vertices
    }

    /// Integer points of the closed polytope, sorted lexicographically.
    pub fn lattice_points(&self) -> &[Vec<i64>] {
        &self.lattice_points
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Lattice-normalized (n-1)-volume of facet `i` (points have volume 1).
    pub fn facet_volume(&self, i: usize) -> f64 {
        self.facet_volumes[i]
    }

    /// `l_i(x) = <x, v_i> + lambda_i`.
    pub fn facet_fn(&self, i: usize, x: &[f64]) -> f64 {
        let mut l = self.offsets[i] as f64;
        for j in 0..self.dim() {
            l += x[j] * self.fan.generator(i)[j] as f64;
        }
        l
    }

    pub fn facet_fn_int(&self, i: usize, u: &[i64]) -> i64 {
        facet_value_int(&self.fan, &self.offsets, i, u)
    }

    pub fn min_facet_value(&self, x: &[f64]) -> f64 {
        (0..self.fan.ray_count())
            .map(|i| self.facet_fn(i, x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.min_facet_value(x) >= 0.0
    }

    /// The pairing vector `iota(u) = (<u, v_1>, ..., <u, v_d>)`.
    pub fn iota(&self, u: &[i64]) -> Vec<i64> {
        iota(&self.fan, u)
    }

    /// Canonical divisor-class representative: subtract `iota(u)` for the
    /// unique `u` matching `a` on the first maximal cone, so canonical
    /// representatives vanish on that cone's generators.
    pub fn picard_reduce(&self, a: &[i64]) -> Result<PicardClass> {
        if a.len() != self.fan.ray_count() {
            return Err(Error::InvalidInput(format!(
                "divisor has {} entries, expected {}",
                a.len(),
                self.fan.ray_count()
            )));
        }
        let cone = &self.fan.max_cones()[0];
        let u = solve_pairing_on_cone(&self.fan, cone, a)?;
        let shift = iota(&self.fan, &u);
        let canonical: Vec<i64> = a.iter().zip(&shift).map(|(x, s)| x - s).collect();
        Ok(PicardClass { canonical })
    }

    pub fn picard_equal(&self, a: &[i64], b: &[i64]) -> Result<bool> {
        Ok(self.picard_reduce(a)?.canonical == self.picard_reduce(b)?.canonical)
    }

    /// `W(z) = sum_i e^{-lambda_i} z^{v_i}`.
    pub fn superpotential_eval(&self, z: &[Complex]) -> Result<Complex> {
        superpotential_eval(&self.fan, &self.offsets, z)
    }
}

/// `W(z) = sum_i e^{-lambda_i} z^{v_i}` for any offset vector, ample or not.
pub fn superpotential_eval(fan: &Fan, offsets: &[i64], z: &[Complex]) -> Result<Complex> {
    if z.len() != fan.dim() {
        return Err(Error::InvalidInput(format!(
            "expected {} coordinates, got {}",
            fan.dim(),
            z.len()
        )));
    }
    if offsets.len() != fan.ray_count() {
        return Err(Error::InvalidInput("offset count mismatch".into()));
    }
    if z.iter().any(|c| c.abs() == 0.0) {
        return Err(Error::ZeroCoordinate);
    }
    let mut w = Complex::ZERO;
    for i in 0..fan.ray_count() {
        let mut term = Complex::new((-(offsets[i] as f64)).exp(), 0.0);
        for (j, zj) in z.iter().enumerate() {
            term = term.mul(zj.powi(fan.generator(i)[j]));
        }
        w = w.add(term);
    }
    Ok(w)
}

/// A divisor class in `Z^d / iota(M)`, stored by its canonical representative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PicardClass {
    pub canonical: Vec<i64>,
}

pub fn iota(fan: &Fan, u: &[i64]) -> Vec<i64> {
    (0..fan.ray_count())
        .map(|i| {
            fan.generator(i)
                .iter()
                .zip(u)
                .map(|(&v, &x)| v * x)
                .sum()
        })
        .collect()
}

/// Solve `<u, v_j> = a_j` for the generators of one maximal cone; exact since
/// the cone matrix is unimodular.
fn solve_pairing_on_cone(fan: &Fan, cone: &[usize], a: &[i64]) -> Result<Vec<i64>> {
    let n = fan.dim();
    let mut m = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for (row, &gi) in cone.iter().enumerate() {
        for col in 0..n {
            m[row * n + col] = fan.generator(gi)[col] as f64;
        }
        b[row] = a[gi] as f64;
    }
    solve_dense(&mut m, n, &mut b)?;
    let u: Vec<i64> = b.iter().map(|&x| x.round() as i64).collect();
    for (row, &gi) in cone.iter().enumerate() {
        let got: i64 = fan.generator(gi).iter().zip(&u).map(|(&v, &x)| v * x).sum();
        if got != a[gi] {
            return Err(Error::SolverFailure(format!(
                "integer pairing solve failed on cone row {row}"
            )));
        }
    }
    Ok(u)
}

fn cone_vertex(fan: &Fan, offsets: &[i64], cone: &[usize]) -> Result<Vec<i64>> {
    let neg: Vec<i64> = cone.iter().map(|&i| -offsets[i]).collect();
    let n = fan.dim();
    let mut m = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for (row, &gi) in cone.iter().enumerate() {
        for col in 0..n {
            m[row * n + col] = fan.generator(gi)[col] as f64;
        }
        b[row] = neg[row] as f64;
    }
    solve_dense(&mut m, n, &mut b)?;
    let x: Vec<i64> = b.iter().map(|&v| v.round() as i64).collect();
    for (row, &gi) in cone.iter().enumerate() {
        let got: i64 = fan.generator(gi).iter().zip(&x).map(|(&v, &c)| v * c).sum();
        if got != neg[row] {
            return Err(Error::NotAmple(format!(
                "cone vertex is not a lattice point (facet {})",
                gi + 1
            )));
        }
    }
    Ok(x)
}

fn facet_value_int(fan: &Fan, offsets: &[i64], i: usize, u: &[i64]) -> i64 {
    offsets[i]
        + fan
            .generator(i)
            .iter()
            .zip(u)
            .map(|(&v, &x)| v * x)
            .sum::<i64>()
}

/// All lattice points of the `scale`-dilated polytope, sorted lexicographically.
fn enumerate_lattice_points(
    fan: &Fan,
    offsets: &[i64],
    vertices: &[Vec<i64>],
    scale: i64,
) -> Vec<Vec<i64>> {
    let n = fan.dim();
    let lo: Vec<i64> = (0..n)
        .map(|j| vertices.iter().map(|v| v[j] * scale).min().unwrap())
        .collect();
    let hi: Vec<i64> = (0..n)
        .map(|j| vertices.iter().map(|v| v[j] * scale).max().unwrap())
        .collect();
    let mut out = Vec::new();
    let mut u = lo.clone();
    loop {
        let inside = (0..fan.ray_count()).all(|i| {
            scale * offsets[i]
                + fan
                    .generator(i)
                    .iter()
                    .zip(&u)
                    .map(|(&v, &x)| v * x)
                    .sum::<i64>()
                >= 0
        });
        if inside {
            out.push(u.clone());
        }
        // odometer increment over the bounding box
        let mut k = n;
        loop {
            if k == 0 {
                out.sort();
                return out;
            }
            k -= 1;
            if u[k] < hi[k] {
                u[k] += 1;
                for uj in u.iter_mut().skip(k + 1) {
                    // reset trailing coordinates
                    let _ = uj;
                }
                for j in k + 1..n {
                    u[j] = lo[j];
                }
                break;
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> i64 {
    let mut r = 1i64;
    for i in 0..k {
        r = r * (n - i) as i64 / (i + 1) as i64;
    }
    r
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product::<f64>().max(1.0)
}

/// Euclidean volume from dilation point counts: the leading coefficient of the
/// lattice-point counting polynomial, extracted by forward differences.
fn ehrhart_volume(fan: &Fan, offsets: &[i64], vertices: &[Vec<i64>]) -> Result<f64> {
    let n = fan.dim();
    let mut counts = vec![1i64];
    for k in 1..=n {
        counts.push(enumerate_lattice_points(fan, offsets, vertices, k as i64).len() as i64);
    }
    let mut lead = 0i64;
    for (k, &c) in counts.iter().enumerate() {
        let sign = if (n - k) % 2 == 0 { 1 } else { -1 };
        lead += sign * binomial(n, k) * c;
    }
    let vol = lead as f64 / factorial(n);
    if vol <= 0.0 {
        return Err(Error::NotAmple("polytope has zero volume".into()));
    }
    Ok(vol)
}

/// Lattice-normalized facet volume from dilation counts restricted to the facet.
fn ehrhart_facet_volume(
    fan: &Fan,
    offsets: &[i64],
    vertices: &[Vec<i64>],
    facet: usize,
) -> Result<f64> {
    let n = fan.dim();
    if n == 1 {
        return Ok(1.0);
    }
    let deg = n - 1;
    let mut counts = vec![1i64];
    for k in 1..=deg {
        let pts = enumerate_lattice_points(fan, offsets, vertices, k as i64);
        let on_facet = pts
            .iter()
            .filter(|u| {
                k as i64 * offsets[facet]
                    + fan
                        .generator(facet)
                        .iter()
                        .zip(u.iter())
                        .map(|(&v, &x)| v * x)
                        .sum::<i64>()
                    == 0
            })
            .count();
        counts.push(on_facet as i64);
    }
    let mut lead = 0i64;
    for (k, &c) in counts.iter().enumerate() {
        let sign = if (deg - k) % 2 == 0 { 1 } else { -1 };
        lead += sign * binomial(deg, k) * c;
    }
    Ok(lead as f64 / factorial(deg))
}

#[cfg(test)]
pub mod fixtures {
    use super::*;

    pub fn cp1_fan() -> Fan {
        Fan::new(1, vec![vec![1], vec![-1]], vec![vec![0], vec![1]]).unwrap()
    }

    pub fn cp1() -> Polytope {
        Polytope::from_fan(cp1_fan(), vec![0, 1]).unwrap()
    }

    pub fn cp2_fan() -> Fan {
        Fan::new(
            2,
            vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
            vec![vec![0, 1], vec![1, 2], vec![2, 0]],
        )
        .unwrap()
    }

    pub fn cp2() -> Polytope {
        Polytope::from_fan(cp2_fan(), vec![0, 0, 1]).unwrap()
    }

    pub fn p1xp1() -> Polytope {
        let fan = Fan::new(
            2,
            vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]],
            vec![vec![0, 2], vec![2, 1], vec![1, 3], vec![3, 0]],
        )
        .unwrap();
        Polytope::from_fan(fan, vec![0, 1, 0, 1]).unwrap()
    }

    pub fn hirzebruch1() -> Polytope {
        let fan = Fan::new(
            2,
            vec![vec![1, 0], vec![0, 1], vec![-1, 1], vec![0, -1]],
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
        )
        .unwrap();
        Polytope::from_fan(fan, vec![0, 0, 1, 2]).unwrap()
    }
}
