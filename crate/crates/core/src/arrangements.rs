//! Frobenius like structures of weighted families of hyperplane arrangements.
//!
//! Over `z ∈ C^n` the fibre `C^k` carries the hyperplanes `f_i = Σ_j b_i^j t_j + z_i = 0`, and
//! the master function `Φ_a = Σ_i a_i log f_i`. Away from the discriminant its critical
//! points `t^(1), ..., t^(μ)` are nondegenerate, and functions on them give the fibre `K_z`:
//! - `C_{∂_i}` is multiplication by `p_i = a_i/f_i`, diagonal in the critical-point frame;
//! - `ζ = 1`;
//! - `S(h_1, ..., h_m) = Σ_s h_1(t^(s))···h_m(t^(s)) / det Hess Φ_a(t^(s))`.
//!
//! For `k = 1` the critical points are the roots of `Σ_i a_i b_i Π_{j≠i} f_j`. For `k >= 2`
//! they are found by damped Newton from seeds built out of the vertices of the arrangement,
//! which is best effort and only runs when explicitly allowed.
//!
//! As `z` moves, critical points are followed by predictor-corrector continuation so that the
//! frame keeps its labels.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::C64;
use crate::frobenius::{
    axiom_report, generation_rank, sample_points, AxiomReport, Fiber, FlatFrameStructure, FormTensor,
    FrobeniusOptions, Order,
};
use crate::matroid::{parse_rational, rational_to_f64, LinearMatroid, Matroid, MatroidExt};
use crate::roots;
use crate::set::ElementSet;
use crate::systems::{systems_of_size, System, SystemContext};

/// The vector matroid of the rows of `B`, checked to have rank `k` = number of columns.
pub fn vector_matroid(b: &[Vec<BigRational>]) -> Result<LinearMatroid> {
    let k = b.first().map_or(0, Vec::len);
    let matroid = LinearMatroid::new(b.to_vec())?;
    let rank = matroid.matrix_rank();
    if rank != k {
        return Err(Error::Rank(format!("rank B = {rank}, expected k = {k}")));
    }
    Ok(matroid)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrangementOptions {
    /// Allow the experimental `k >= 2` solver.
    pub allow_k_ge_2: bool,
    /// Relative separation below which points, Hessians or hyperplane values count as
    /// degenerate.
    pub margin: f64,
    /// Relative residual accepted for `∂Φ_a/∂t = 0`.
    pub newton_tolerance: f64,
}

impl Default for ArrangementOptions {
    fn default() -> Self {
        ArrangementOptions {
            allow_k_ge_2: false,
            margin: 1e-8,
            newton_tolerance: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ArrangementData {
    b: Vec<Vec<BigRational>>,
    bf: Vec<Vec<f64>>,
    a: Vec<C64>,
    x: Vec<C64>,
    matroid: Arc<LinearMatroid>,
}

/// Critical points of `Φ_a` in one fibre with their Hessians.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalPointFrame {
    pub points: Vec<Vec<C64>>,
    #[serde(skip)]
    pub hessians: Vec<DMatrix<C64>>,
}

impl CriticalPointFrame {
    pub fn mu(&self) -> usize {
        self.points.len()
    }

    pub fn hessian_determinants(&self) -> Vec<C64> {
        self.hessians.iter().map(|h| h.determinant()).collect()
    }
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn inf_norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

impl ArrangementData {
    pub fn new(b: Vec<Vec<BigRational>>, a: Vec<C64>, x: Vec<C64>) -> Result<Self> {
        let n = b.len();
        let k = b.first().map_or(0, Vec::len);
        if k == 0 || n <= k {
            return Err(Error::Rank(format!("need 0 < k < n, got n = {n}, k = {k}")));
        }
        if a.len() != n || x.len() != n {
            return Err(Error::Schema(format!(
                "B has {n} rows but a has {} and x has {} entries",
                a.len(),
                x.len()
            )));
        }
        if a.iter().any(|w| w.norm() == 0.0) {
            return Err(Error::Precondition("weights must be nonzero".into()));
        }
        let matroid = Arc::new(vector_matroid(&b)?);
        let bf = b.iter().map(|row| row.iter().map(rational_to_f64).collect()).collect();
        Ok(ArrangementData { b, bf, a, x, matroid })
    }

    /// Integer matrix, real weights and real basepoint.
    pub fn from_integers(b: &[Vec<i64>], a: &[f64], x: &[f64]) -> Result<Self> {
        let rows = b
            .iter()
            .map(|row| row.iter().map(|&v| parse_rational(&v.to_string())).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let real = |v: &[f64]| v.iter().map(|&r| C64::new(r, 0.0)).collect();
        Self::new(rows, real(a), real(x))
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn k(&self) -> usize {
        self.b[0].len()
    }

    pub fn b(&self) -> &[Vec<BigRational>] {
        &self.b
    }

    pub fn b_f64(&self) -> &[Vec<f64>] {
        &self.bf
    }

    pub fn weights(&self) -> &[C64] {
        &self.a
    }

    pub fn basepoint(&self) -> &[C64] {
        &self.x
    }

    pub fn matroid(&self) -> Arc<LinearMatroid> {
        self.matroid.clone()
    }

    /// `f_i(z, t) = Σ_j b_i^j t_j + z_i`.
    pub fn hyperplane_values(&self, z: &[C64], t: &[C64]) -> Vec<C64> {
        self.bf
            .iter()
            .zip(z)
            .map(|(row, &zi)| row.iter().zip(t).fold(zi, |acc, (&b, &tj)| acc + tj * b))
            .collect()
    }

    /// `∂Φ_a/∂t_j = Σ_i a_i b_i^j / f_i`.
    pub fn gradient(&self, f: &[C64]) -> DVector<C64> {
        let mut g = DVector::zeros(self.k());
        for ((row, &ai), &fi) in self.bf.iter().zip(&self.a).zip(f) {
            let w = ai / fi;
            for (j, &b) in row.iter().enumerate() {
                g[j] += w * b;
            }
        }
        g
    }

    /// `∂²Φ_a/∂t_j∂t_l = -Σ_i a_i b_i^j b_i^l / f_i²`.
    pub fn hessian(&self, f: &[C64]) -> DMatrix<C64> {
        let k = self.k();
        let mut h = DMatrix::zeros(k, k);
        for ((row, &ai), &fi) in self.bf.iter().zip(&self.a).zip(f) {
            let w = -ai / (fi * fi);
            for j in 0..k {
                for l in 0..k {
                    h[(j, l)] += w * row[j] * row[l];
                }
            }
        }
        h
    }

    /// `Σ_i |a_i b_i| / |f_i|`, the natural size of the gradient terms.
    fn gradient_scale(&self, f: &[C64]) -> f64 {
        self.bf
            .iter()
            .zip(&self.a)
            .zip(f)
            .map(|((row, ai), fi)| ai.norm() * row.iter().map(|b| b.abs()).sum::<f64>() / fi.norm())
            .sum()
    }

    fn newton(&self, z: &[C64], t: &[C64], max_iter: usize) -> Option<Vec<C64>> {
        let mut t = t.to_vec();
        for _ in 0..max_iter {
            let f = self.hyperplane_values(z, &t);
            if f.iter().any(|v| v.norm() == 0.0) {
                return None;
            }
            let g = self.gradient(&f);
            let h = self.hessian(&f);
            let step = h.lu().solve(&g)?;
            for (tj, sj) in t.iter_mut().zip(step.iter()) {
                *tj -= sj;
            }
            let size = step.iter().map(|s| s.norm()).fold(0.0, f64::max);
            if !size.is_finite() {
                return None;
            }
            if size <= 1e-15 * (1.0 + inf_norm(&t)) {
                break;
            }
        }
        Some(t)
    }

    /// Checks a candidate set of critical points and attaches the Hessians.
    fn certify(&self, z: &[C64], points: Vec<Vec<C64>>, opts: &ArrangementOptions) -> Result<CriticalPointFrame> {
        let scale = 1.0 + inf_norm(z);
        let mut hessians = Vec::with_capacity(points.len());
        for t in &points {
            let f = self.hyperplane_values(z, t);
            if let Some(i) = f.iter().position(|v| v.norm() < opts.margin * scale) {
                return Err(Error::NearDiscriminant(format!(
                    "critical point {} lies on hyperplane {}",
                    show(t),
                    i + 1
                )));
            }
            let g = self.gradient(&f);
            let residual = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if residual > opts.newton_tolerance * self.gradient_scale(&f).max(1.0) {
                return Err(Error::Continuation(format!(
                    "critical point residual {residual:e} at {}",
                    show(t)
                )));
            }
            let h = self.hessian(&f);
            let h_scale: f64 = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let det = h.determinant();
            if det.norm() < opts.margin * h_scale.powi(self.k() as i32) {
                return Err(Error::NearDiscriminant(format!("degenerate critical point {}", show(t))));
            }
            hessians.push(h);
        }
        for (s, p) in points.iter().enumerate() {
            for q in &points[s + 1..] {
                if dist(p, q) < opts.margin * (1.0 + inf_norm(p)) {
                    return Err(Error::NearDiscriminant(format!("critical points collide near {}", show(p))));
                }
            }
        }
        Ok(CriticalPointFrame { points, hessians })
    }

    pub fn critical_points(&self, z: &[C64], opts: &ArrangementOptions) -> Result<CriticalPointFrame> {
        if z.len() != self.n() {
            return Err(Error::Schema(format!("z has {} coordinates, expected {}", z.len(), self.n())));
        }
        if self.k() == 1 {
            self.critical_points_k1(z, opts)
        } else if opts.allow_k_ge_2 {
            self.critical_points_multistart(z, opts)
        } else {
            Err(Error::Unsupported(format!(
                "k = {} needs the experimental multivariate solver (allow_k_ge_2)",
                self.k()
            )))
        }
    }

    fn critical_points_k1(&self, z: &[C64], opts: &ArrangementOptions) -> Result<CriticalPointFrame> {
        let active: Vec<usize> = (0..self.n()).filter(|&i| self.bf[i][0] != 0.0).collect();
        let mut numerator = vec![C64::default()];
        for &i in &active {
            let mut term = vec![self.a[i] * self.bf[i][0]];
            for &j in &active {
                if j != i {
                    term = roots::mul_linear(&term, z[j], C64::new(self.bf[j][0], 0.0));
                }
            }
            if numerator.len() < term.len() {
                numerator.resize(term.len(), C64::default());
            }
            for (acc, v) in numerator.iter_mut().zip(term) {
                *acc += v;
            }
        }
        let mut points = Vec::new();
        for t in roots::roots(&numerator)? {
            let refined = self.newton(z, &[t], 8).unwrap_or_else(|| vec![t]);
            points.push(refined);
        }
        if points.is_empty() {
            return Err(Error::Precondition("the master function has no critical points".into()));
        }
        self.certify(z, points, opts)
    }

    /// Vertices of the arrangement: solutions of `f_i = 0, i ∈ I` for bases `I`.
    fn vertices(&self, z: &[C64]) -> Vec<Vec<C64>> {
        let k = self.k();
        self.matroid
            .bases()
            .into_iter()
            .filter_map(|base| {
                let rows: Vec<usize> = base.iter().collect();
                let m = DMatrix::from_fn(k, k, |r, c| C64::new(self.bf[rows[r]][c], 0.0));
                let rhs = DVector::from_iterator(k, rows.iter().map(|&i| -z[i]));
                m.lu().solve(&rhs).map(|v| v.iter().copied().collect())
            })
            .collect()
    }

    fn critical_points_multistart(&self, z: &[C64], opts: &ArrangementOptions) -> Result<CriticalPointFrame> {
        let k = self.k();
        let vertices = self.vertices(z);
        let mut seeds: Vec<Vec<C64>> = Vec::new();
        // Barycentres of (k+1)-tuples of vertices land inside bounded chambers.
        let tuples = crate::matroid::k_subsets(ElementSet::full(vertices.len().min(20)), k + 1);
        for tuple in tuples.into_iter().take(4000) {
            let mut c = vec![C64::default(); k];
            for v in tuple.iter() {
                for (cj, vj) in c.iter_mut().zip(&vertices[v]) {
                    *cj += vj / (k + 1) as f64;
                }
            }
            seeds.push(c);
        }
        let scale = 1.0 + inf_norm(z);
        let mut found: Vec<Vec<C64>> = Vec::new();
        for seed in seeds {
            let Some(t) = self.damped_newton(z, &seed) else {
                continue;
            };
            let f = self.hyperplane_values(z, &t);
            if f.iter().any(|v| v.norm() < opts.margin * scale) {
                continue;
            }
            if found.iter().all(|p| dist(p, &t) > 1e-7 * (1.0 + inf_norm(&t))) {
                found.push(t);
            }
        }
        if found.is_empty() {
            return Err(Error::Continuation("multistart Newton found no critical points".into()));
        }
        self.certify(z, found, opts)
    }

    fn damped_newton(&self, z: &[C64], seed: &[C64]) -> Option<Vec<C64>> {
        let mut t = seed.to_vec();
        let norm_of = |t: &[C64]| {
            let f = self.hyperplane_values(z, t);
            let g = self.gradient(&f);
            g.iter().map(|v| v.norm()).fold(0.0, f64::max) / self.gradient_scale(&f).max(1e-300)
        };
        let mut current = norm_of(&t);
        for _ in 0..100 {
            if current < 1e-14 {
                return Some(t);
            }
            let f = self.hyperplane_values(z, &t);
            let step = self.hessian(&f).lu().solve(&self.gradient(&f))?;
            let mut lambda = 1.0;
            loop {
                let trial: Vec<C64> = t.iter().zip(step.iter()).map(|(a, s)| a - s * lambda).collect();
                let value = norm_of(&trial);
                if value.is_finite() && value < current {
                    t = trial;
                    current = value;
                    break;
                }
                lambda /= 2.0;
                if lambda < 1e-6 {
                    return None;
                }
            }
        }
        (current < 1e-12).then_some(t)
    }

    /// Follows the critical points `from` at `z0` to `z1` along the segment between them.
    pub fn track(
        &self,
        from: &CriticalPointFrame,
        z0: &[C64],
        z1: &[C64],
        opts: &ArrangementOptions,
    ) -> Result<CriticalPointFrame> {
        let dz: Vec<C64> = z1.iter().zip(z0).map(|(a, b)| a - b).collect();
        let mut points = from.points.clone();
        let mut s = 0.0;
        let mut ds: f64 = 1.0;
        while s < 1.0 {
            ds = ds.min(1.0 - s);
            if ds < 1e-12 {
                return Err(Error::Continuation("step size underflow while tracking critical points".into()));
            }
            let z_now: Vec<C64> = z0.iter().zip(&dz).map(|(a, d)| a + d * s).collect();
            let z_next: Vec<C64> = z0.iter().zip(&dz).map(|(a, d)| a + d * (s + ds)).collect();
            let separation = min_separation(&points);
            match self.continuation_step(&points, &z_now, &z_next, &dz, ds, separation) {
                Some(next) => {
                    points = next;
                    s += ds;
                    ds *= 2.0;
                }
                None => ds /= 2.0,
            }
        }
        self.certify(z1, points, opts)
    }

    fn continuation_step(
        &self,
        points: &[Vec<C64>],
        z_now: &[C64],
        z_next: &[C64],
        dz: &[C64],
        ds: f64,
        separation: f64,
    ) -> Option<Vec<Vec<C64>>> {
        let k = self.k();
        let mut out = Vec::with_capacity(points.len());
        for t in points {
            let f = self.hyperplane_values(z_now, t);
            // H dt = Σ_i a_i b_i dz_i / f_i²
            let mut rhs = DVector::zeros(k);
            for (i, (row, &ai)) in self.bf.iter().zip(&self.a).enumerate() {
                let w = ai * dz[i] * ds / (f[i] * f[i]);
                for j in 0..k {
                    rhs[j] += w * row[j];
                }
            }
            let dt = self.hessian(&f).lu().solve(&rhs)?;
            let predicted: Vec<C64> = t.iter().zip(dt.iter()).map(|(a, d)| a + d).collect();
            let corrected = self.newton(z_next, &predicted, 10)?;
            let f_next = self.hyperplane_values(z_next, &corrected);
            let g = self.gradient(&f_next);
            let residual = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if !(residual <= 1e-10 * self.gradient_scale(&f_next).max(1.0)) {
                return None;
            }
            // Guard against jumping to a neighbouring path.
            if dist(&corrected, &predicted) > 0.25 * separation || dist(&corrected, t) > 0.5 * separation {
                return None;
            }
            out.push(corrected);
        }
        Some(out)
    }

    /// Whether `z` is safely off the discriminant.
    pub fn discriminant_probe(&self, z: &[C64], opts: &ArrangementOptions) -> bool {
        self.critical_points(z, opts).is_ok()
    }
}

/// `(a+bi, ...)` for messages.
fn show(t: &[C64]) -> String {
    let parts: Vec<String> = t
        .iter()
        .map(|c| if c.im == 0.0 { format!("{}", c.re + 0.0) } else { format!("{c}") })
        .collect();
    format!("({})", parts.join(", "))
}

fn min_separation(points: &[Vec<C64>]) -> f64 {
    let mut best = f64::INFINITY;
    for (s, p) in points.iter().enumerate() {
        for q in &points[s + 1..] {
            best = best.min(dist(p, q));
        }
    }
    if best.is_finite() {
        best
    } else {
        // A single path: bound the jump by the size of the point instead.
        points.first().map_or(1.0, |p| 1.0 + inf_norm(p))
    }
}

/// The structure of order `(n, k, m)` of an arrangement, in the critical-point frame.
#[derive(Clone, Debug)]
pub struct ArrangementStructure {
    data: ArrangementData,
    m: usize,
    at_basepoint: CriticalPointFrame,
    opts: ArrangementOptions,
}

impl ArrangementStructure {
    pub fn new(data: ArrangementData, m: usize, opts: ArrangementOptions) -> Result<Self> {
        if m == 0 {
            return Err(Error::Precondition("m must be at least 1".into()));
        }
        let at_basepoint = data.critical_points(data.basepoint(), &opts)?;
        Ok(ArrangementStructure {
            data,
            m,
            at_basepoint,
            opts,
        })
    }

    pub fn data(&self) -> &ArrangementData {
        &self.data
    }

    pub fn critical_points_at_basepoint(&self) -> &CriticalPointFrame {
        &self.at_basepoint
    }

    /// Critical points over `z`, labelled consistently with the basepoint.
    pub fn frame_at(&self, z: &[C64]) -> Result<CriticalPointFrame> {
        let tracked = self.data.track(&self.at_basepoint, self.data.basepoint(), z, &self.opts)?;
        if self.data.k() > 1 {
            return Ok(tracked);
        }
        let direct = self.data.critical_points(z, &self.opts)?;
        if direct.mu() != tracked.mu() {
            return Err(Error::Continuation(format!(
                "{} critical points at z, {} tracked from the basepoint",
                direct.mu(),
                tracked.mu()
            )));
        }
        let mut used = vec![false; direct.mu()];
        let mut points = Vec::with_capacity(direct.mu());
        let mut hessians = Vec::with_capacity(direct.mu());
        for t in &tracked.points {
            let (best, _) = direct
                .points
                .iter()
                .enumerate()
                .map(|(idx, p)| (idx, dist(p, t)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty");
            if used[best] {
                return Err(Error::NearDiscriminant("two tracked critical points match the same point".into()));
            }
            used[best] = true;
            points.push(direct.points[best].clone());
            hessians.push(direct.hessians[best].clone());
        }
        Ok(CriticalPointFrame { points, hessians })
    }

    fn fiber_from_frame(&self, z: &[C64], frame: &CriticalPointFrame) -> Fiber {
        let mu = frame.mu();
        let n = self.data.n();
        let mut higgs = vec![DMatrix::zeros(mu, mu); n];
        for (s, t) in frame.points.iter().enumerate() {
            let f = self.data.hyperplane_values(z, t);
            for i in 0..n {
                higgs[i][(s, s)] = self.data.a[i] / f[i];
            }
        }
        let weights = frame.hessian_determinants().into_iter().map(|d| d.inv()).collect();
        Fiber {
            higgs,
            unit: DVector::from_element(mu, C64::new(1.0, 0.0)),
            form: FormTensor::Diagonal(weights),
        }
    }

    /// `max_j ‖Σ_i b_i^j C_{∂_i}‖` at `z`, which vanishes because `Σ_i b_i^j p_i = 0`.
    pub fn vanishing_residual(&self, z: &[C64]) -> Result<f64> {
        let fiber = self.fiber(z)?;
        let mut worst: f64 = 0.0;
        for j in 0..self.data.k() {
            let sum = (0..self.data.n()).fold(DMatrix::zeros(self.mu(), self.mu()), |acc, i| {
                acc + &fiber.higgs[i] * C64::new(self.data.bf[i][j], 0.0)
            });
            worst = worst.max(sum.iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
        Ok(worst)
    }

    /// `|w|_max / |w|_min` for the residue weights `w_s = 1/det Hess_s`.
    pub fn pairing_condition(&self) -> f64 {
        let w: Vec<f64> = self
            .at_basepoint
            .hessian_determinants()
            .iter()
            .map(|d| d.inv().norm())
            .collect();
        let max = w.iter().cloned().fold(0.0, f64::max);
        let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// For `k = 1`: the rank of `(p_1, ..., p_n)` as vectors in `C^μ`, and
    /// `‖Σ_i b_i p_i‖ / (‖P‖·‖b‖)`, which is zero when `b` spans the kernel direction.
    pub fn period_map_kernel(&self) -> Result<(usize, f64)> {
        if self.data.k() != 1 {
            return Err(Error::Unsupported("the kernel check is for k = 1".into()));
        }
        let fiber = self.fiber(self.data.basepoint())?;
        let n = self.data.n();
        let p = DMatrix::from_fn(self.mu(), n, |s, i| fiber.higgs[i][(s, s)]);
        let b = DVector::from_fn(n, |i, _| C64::new(self.data.bf[i][0], 0.0));
        let sv = p.clone().svd(false, false).singular_values;
        let top = sv.iter().cloned().fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s > 1e-9 * top).count();
        let residual = (&p * &b).norm() / (p.norm() * b.norm());
        Ok((rank, residual))
    }
}

impl FlatFrameStructure for ArrangementStructure {
    fn order(&self) -> Order {
        Order {
            n: self.data.n(),
            k: self.data.k(),
            m: self.m,
        }
    }

    fn matroid(&self) -> Arc<dyn Matroid> {
        self.data.matroid.clone()
    }

    fn basepoint(&self) -> &[C64] {
        self.data.basepoint()
    }

    fn mu(&self) -> usize {
        self.at_basepoint.mu()
    }

    fn fiber(&self, z: &[C64]) -> Result<Fiber> {
        let frame = if z == self.data.basepoint() {
            self.at_basepoint.clone()
        } else {
            self.frame_at(z)?
        };
        Ok(self.fiber_from_frame(z, &frame))
    }

    fn frame_is_flat(&self) -> bool {
        false
    }
}

/// Everything the command line reports about an arrangement.
#[derive(Clone, Debug, Serialize)]
pub struct ArrangementReport {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub mu: usize,
    pub bases: Vec<ElementSet>,
    pub critical_points: Vec<Vec<C64>>,
    pub axioms: AxiomReport,
    /// `true` when every axiom residual is below the hard threshold.
    pub valid: bool,
    /// Residual of `Σ_i b_i^j C_{∂_i} = 0`.
    pub vanishing: f64,
    pub generation_rank: usize,
    pub pairing_condition: f64,
    /// `S(ζ, ..., ζ)` at the basepoint.
    pub form_unit: C64,
    /// `S(C_Tζ, ζ, ..., ζ)` at the basepoint for the strong `mk`-systems `T`.
    pub form_values: Vec<(System, C64)>,
}

pub fn verify_arrangement(
    structure: &ArrangementStructure,
    opts: &FrobeniusOptions,
) -> Result<ArrangementReport> {
    let Order { n, k, m } = structure.order();
    let x = structure.basepoint().to_vec();
    let samples = sample_points(&x, opts);
    let axioms = axiom_report(structure, &samples, opts)?;
    let mut vanishing: f64 = 0.0;
    for z in &samples {
        vanishing = vanishing.max(structure.vanishing_residual(z)?);
    }
    let fiber = structure.fiber(&x)?;
    let ctx = SystemContext::new(structure.matroid(), m)?;
    let mut form_values = Vec::new();
    for t in systems_of_size(n, m * k) {
        if ctx.is_strong(&t)? {
            let v = fiber.form_on_sections(std::slice::from_ref(&t), m);
            form_values.push((t, v));
        }
    }
    Ok(ArrangementReport {
        n,
        k,
        m,
        mu: structure.mu(),
        bases: structure.matroid().bases(),
        critical_points: structure.critical_points_at_basepoint().points.clone(),
        valid: axioms.max_violation() <= opts.hard_threshold,
        axioms,
        vanishing,
        generation_rank: generation_rank(structure)?,
        pairing_condition: structure.pairing_condition(),
        form_unit: fiber.form_on_sections(&[], m),
        form_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn pair(z1: f64, z2: f64) -> ArrangementData {
        ArrangementData::from_integers(&[vec![1], vec![1]], &[1.0, 1.0], &[z1, z2]).unwrap()
    }

    #[test]
    fn vector_matroid_examples() {
        let q = |v: i64| parse_rational(&v.to_string()).unwrap();
        let m = vector_matroid(&[vec![q(1)], vec![q(1)]]).unwrap();
        assert_eq!(m.bases(), vec![ElementSet::from_labels(&[1]), ElementSet::from_labels(&[2])]);
        let tri = vector_matroid(&[vec![q(1), q(0)], vec![q(0), q(1)], vec![q(1), q(1)]]).unwrap();
        assert_eq!(tri.bases().len(), 3);
        let loopy = vector_matroid(&[vec![q(1)], vec![q(0)], vec![q(2)]]).unwrap();
        assert!(!loopy.independent(ElementSet::from_labels(&[2])));
        let bad = vector_matroid(&[vec![q(1), q(2)], vec![q(2), q(4)], vec![q(3), q(6)]]);
        assert_eq!(bad.unwrap_err().code(), "rank");
    }

    #[test]
    fn closed_form_pair() {
        let d = pair(1.0, -1.0);
        let opts = ArrangementOptions::default();
        let frame = d.critical_points(d.basepoint(), &opts).unwrap();
        assert_eq!(frame.mu(), 1);
        assert!((frame.points[0][0] - c(0.0)).norm() < 1e-14);
        // Hess = -8/(z1 - z2)² = -2
        assert!((frame.hessian_determinants()[0] - c(-2.0)).norm() < 1e-12);
        let z = [c(0.4), c(2.2)];
        let frame = d.critical_points(&z, &opts).unwrap();
        assert!((frame.points[0][0] - c(-1.3)).norm() < 1e-13);
    }

    #[test]
    fn generic_point_count_is_n_minus_one() {
        let d = ArrangementData::from_integers(
            &[vec![1], vec![2], vec![-1], vec![3]],
            &[1.0, 0.5, 2.0, 1.5],
            &[0.3, -1.7, 2.9, 4.1],
        )
        .unwrap();
        let frame = d.critical_points(d.basepoint(), &ArrangementOptions::default()).unwrap();
        assert_eq!(frame.mu(), 3);
        for t in &frame.points {
            let f = d.hyperplane_values(d.basepoint(), t);
            assert!(d.gradient(&f).norm() < 1e-12);
        }
    }

    #[test]
    fn discriminant_probe_thresholds() {
        let d = pair(1.0, -1.0);
        let opts = ArrangementOptions::default();
        assert!(d.discriminant_probe(&[c(1.0), c(-1.0)], &opts));
        assert!(!d.discriminant_probe(&[c(0.0), c(0.0)], &opts));
        assert!(!d.discriminant_probe(&[c(1e-14), c(0.0)], &opts));
    }

    #[test]
    fn tracking_keeps_labels() {
        let d = ArrangementData::from_integers(&[vec![1], vec![1], vec![1]], &[1.0, 1.0, 1.0], &[0.0, 1.0, 3.0])
            .unwrap();
        let opts = ArrangementOptions::default();
        let start = d.critical_points(d.basepoint(), &opts).unwrap();
        let target = [c(0.5), c(1.2), c(2.0)];
        let tracked = d.track(&start, d.basepoint(), &target, &opts).unwrap();
        let direct = d.critical_points(&target, &opts).unwrap();
        assert_eq!(tracked.mu(), 2);
        // Each tracked point stays between the same pair of hyperplanes.
        for (before, after) in start.points.iter().zip(&tracked.points) {
            let side = |t: C64, z: &[C64]| z.iter().filter(|&&zi| (t + zi).re > 0.0).count();
            assert_eq!(side(before[0], d.basepoint()), side(after[0], &target));
            assert!(direct.points.iter().any(|p| dist(p, after) < 1e-10));
        }
    }

    #[test]
    fn golden_values_of_the_pair() {
        let d = pair(1.0, -1.0);
        let s = ArrangementStructure::new(d, 2, ArrangementOptions::default()).unwrap();
        let z = [c(0.7), c(-0.4)];
        let fiber = s.fiber(&z).unwrap();
        let diff = 0.7 + 0.4;
        assert!((fiber.higgs[0][(0, 0)] - c(2.0 / diff)).norm() < 1e-12);
        let s_unit = fiber.form_on_sections(&[], 2);
        assert!((s_unit - c(-diff * diff / 8.0)).norm() < 1e-12);
        let s_11 = fiber.form_on_sections(&[System::from_vec(vec![2, 0])], 2);
        assert!((s_11 - c(-0.5)).norm() < 1e-12);
        assert!(s.vanishing_residual(&z).unwrap() < 1e-12);
    }

    #[test]
    fn kernel_of_the_period_map() {
        let d = ArrangementData::from_integers(&[vec![1], vec![2], vec![-1]], &[1.0, 2.0, 0.5], &[0.0, 3.0, 1.1])
            .unwrap();
        let s = ArrangementStructure::new(d, 2, ArrangementOptions::default()).unwrap();
        let (rank, residual) = s.period_map_kernel().unwrap();
        assert_eq!(rank, 2);
        assert!(residual < 1e-12);
    }

    #[test]
    fn k2_needs_the_flag() {
        let d = ArrangementData::from_integers(
            &[vec![1, 0], vec![0, 1], vec![1, 1], vec![1, -1]],
            &[1.0, 1.0, 1.0, 1.0],
            &[0.1, 0.35, -0.9, 2.3],
        )
        .unwrap();
        let strict = ArrangementOptions::default();
        assert_eq!(d.critical_points(d.basepoint(), &strict).unwrap_err().code(), "unsupported");
        let allowed = ArrangementOptions {
            allow_k_ge_2: true,
            ..strict
        };
        let frame = d.critical_points(d.basepoint(), &allowed).unwrap();
        // Four real lines in general position bound three chambers.
        assert_eq!(frame.mu(), 3);
    }

    #[test]
    fn rank_and_shape_errors() {
        assert_eq!(
            ArrangementData::from_integers(&[vec![1]], &[1.0], &[0.0]).unwrap_err().code(),
            "rank"
        );
        assert_eq!(
            ArrangementData::from_integers(&[vec![1], vec![1]], &[1.0], &[0.0, 1.0]).unwrap_err().code(),
            "schema"
        );
    }
}
