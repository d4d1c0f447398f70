//! Axiom checks for Frobenius like structures, and construction of the polynomials Q and L.
//!
//! A structure is given by evaluators: at every `z` near the basepoint it returns a [`Fiber`]
//! holding the Higgs matrices `C_{∂_i}(z)`, the unit section `ζ(z)` and the `m`-linear form
//! `S(z)`, all in some working frame of `K`. When the working frame is not flat, the flat
//! frame is rebuilt from the sections `C_Iζ` (`I` maximal independent), which the axioms
//! declare flat: choose sets `I_1, ..., I_μ` at the basepoint whose sections span the fibre and
//! use `Φ(z) = (C_{I_1}ζ, ..., C_{I_μ}ζ)(z)` as the frame. Every statement about the
//! connection is then checked for `Φ⁻¹ C_{∂_i} Φ`, `Φ⁻¹ C_Iζ` and `S(Φ·, ..., Φ·)`.
//!
//! The potentials are
//! - `Q = Σ_T (1/T!)·S(C_Tζ, ζ, ..., ζ)·z^T` over strong `mk`-systems `T` (zero elsewhere);
//! - `L = Σ_T a_T·(z-x)^T` truncated at `|T| <= N_max`, with `a_T` the mean of the candidates
//!   `(1/T!)·∂_{T1} S(C_{T2}ζ, ζ, ..., ζ)(x)` over all good decompositions `T = T1 + T2`, and
//!   zero when `T` has none.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{try_par_map, Execution};
use crate::fd::{self, FdOptions, C64};
use crate::matroid::{Matroid, MatroidExt, UniformMatroid};
use crate::polynomial::Polynomial;
use crate::set::ElementSet;
use crate::systems::{systems_of_size, GoodDecomposition, SystemContext, System};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Order {
    pub n: usize,
    pub k: usize,
    pub m: usize,
}

/// An `m`-linear form on `C^μ`.
#[derive(Clone, Debug, PartialEq)]
pub enum FormTensor {
    /// `S(h_1, ..., h_m) = Σ_s w_s·h_1[s]···h_m[s]`.
    Diagonal(Vec<C64>),
    /// `S(e_{a_1}, ..., e_{a_m})` in row-major order (`a_1` varies slowest).
    Dense {
        mu: usize,
        m: usize,
        entries: Vec<C64>,
    },
}

impl FormTensor {
    pub fn eval(&self, args: &[DVector<C64>]) -> C64 {
        match self {
            FormTensor::Diagonal(w) => w
                .iter()
                .enumerate()
                .map(|(s, &ws)| args.iter().fold(ws, |acc, h| acc * h[s]))
                .sum(),
            FormTensor::Dense { mu, m, entries } => {
                assert_eq!(args.len(), *m, "form arity");
                let mut total = C64::default();
                for (idx, &e) in entries.iter().enumerate() {
                    if e == C64::default() {
                        continue;
                    }
                    let mut rest = idx;
                    let mut term = e;
                    for r in (0..*m).rev() {
                        term *= args[r][rest % mu];
                        rest /= mu;
                    }
                    total += term;
                }
                total
            }
        }
    }
}

/// The data of a structure at one point `z`, in the working frame.
#[derive(Clone, Debug)]
pub struct Fiber {
    pub higgs: Vec<DMatrix<C64>>,
    pub unit: DVector<C64>,
    pub form: FormTensor,
}

impl Fiber {
    pub fn mu(&self) -> usize {
        self.unit.len()
    }

    /// `C_T v = Π_i C_{∂_i}^{T(i)} v`.
    pub fn apply_system(&self, t: &System, v: &DVector<C64>) -> DVector<C64> {
        let mut out = v.clone();
        for (i, &c) in t.as_slice().iter().enumerate() {
            for _ in 0..c {
                out = &self.higgs[i] * out;
            }
        }
        out
    }

    pub fn apply_set(&self, set: ElementSet, v: &DVector<C64>) -> DVector<C64> {
        set.iter().fold(v.clone(), |acc, i| &self.higgs[i] * acc)
    }

    /// `C_T ζ`.
    pub fn section(&self, t: &System) -> DVector<C64> {
        self.apply_system(t, &self.unit)
    }

    pub fn set_section(&self, set: ElementSet) -> DVector<C64> {
        self.apply_set(set, &self.unit)
    }

    /// `S(C_{T_1}ζ, ..., C_{T_r}ζ, ζ, ..., ζ)` with the remaining slots filled by `ζ`.
    pub fn form_on_sections(&self, systems: &[System], m: usize) -> C64 {
        let args: Vec<DVector<C64>> = (0..m)
            .map(|r| match systems.get(r) {
                Some(t) => self.section(t),
                None => self.unit.clone(),
            })
            .collect();
        self.form.eval(&args)
    }
}

/// A Frobenius like structure given by its evaluators.
///
/// Evaluators must be pure: the library calls them concurrently and at nearby points for
/// finite differences.
pub trait FlatFrameStructure: Send + Sync {
    fn order(&self) -> Order;
    fn matroid(&self) -> Arc<dyn Matroid>;
    fn basepoint(&self) -> &[C64];
    fn mu(&self) -> usize;
    fn fiber(&self, z: &[C64]) -> Result<Fiber>;
    /// Whether the working frame itself is flat.
    fn frame_is_flat(&self) -> bool;
}

type FiberFn = dyn Fn(&[C64]) -> Result<Fiber> + Send + Sync;

/// A structure assembled from closures.
#[derive(Clone)]
pub struct SyntheticStructure {
    order: Order,
    matroid: Arc<dyn Matroid>,
    basepoint: Vec<C64>,
    mu: usize,
    flat: bool,
    eval: Arc<FiberFn>,
}

impl std::fmt::Debug for SyntheticStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SyntheticStructure")
            .field("order", &self.order)
            .field("mu", &self.mu)
            .field("flat", &self.flat)
            .finish()
    }
}

impl SyntheticStructure {
    pub fn new(
        matroid: Arc<dyn Matroid>,
        m: usize,
        basepoint: Vec<C64>,
        mu: usize,
        flat: bool,
        eval: Arc<FiberFn>,
    ) -> Result<Self> {
        let n = matroid.ground_size();
        if basepoint.len() != n {
            return Err(Error::Schema(format!(
                "basepoint has {} coordinates, the matroid {n} elements",
                basepoint.len()
            )));
        }
        if m == 0 || mu == 0 {
            return Err(Error::Precondition("m and μ must be positive".into()));
        }
        let order = Order {
            n,
            k: matroid.full_rank(),
            m,
        };
        let s = SyntheticStructure {
            order,
            matroid,
            basepoint,
            mu,
            flat,
            eval,
        };
        check_fiber_shape(&s, &s.fiber(&s.basepoint)?)?;
        Ok(s)
    }

    /// The same fibre at every point, in a flat frame.
    pub fn constant(matroid: Arc<dyn Matroid>, m: usize, basepoint: Vec<C64>, fiber: Fiber) -> Result<Self> {
        let mu = fiber.mu();
        Self::new(matroid, m, basepoint, mu, true, Arc::new(move |_| Ok(fiber.clone())))
    }

    /// The two-dimensional Frobenius manifold with potential `F = z1²z2/2 + z2⁴/12` and metric
    /// `η = [[0,1],[1,0]]`, as a structure of order `(2,1,2)` over `U_{1,2}`.
    pub fn frobenius_manifold_example(basepoint: [C64; 2]) -> Self {
        let eval = |z: &[C64]| -> Result<Fiber> {
            let one = C64::new(1.0, 0.0);
            let zero = C64::default();
            Ok(Fiber {
                higgs: vec![
                    DMatrix::identity(2, 2),
                    DMatrix::from_row_slice(2, 2, &[zero, z[1] * 2.0, one, zero]),
                ],
                unit: DVector::from_vec(vec![one, zero]),
                form: FormTensor::Dense {
                    mu: 2,
                    m: 2,
                    entries: vec![zero, one, one, zero],
                },
            })
        };
        Self::new(
            Arc::new(UniformMatroid::new(1, 2).expect("U(1,2)")),
            2,
            basepoint.to_vec(),
            2,
            true,
            Arc::new(eval),
        )
        .expect("well-formed example")
    }
}

impl FlatFrameStructure for SyntheticStructure {
    fn order(&self) -> Order {
        self.order
    }

    fn matroid(&self) -> Arc<dyn Matroid> {
        self.matroid.clone()
    }

    fn basepoint(&self) -> &[C64] {
        &self.basepoint
    }

    fn mu(&self) -> usize {
        self.mu
    }

    fn fiber(&self, z: &[C64]) -> Result<Fiber> {
        (self.eval)(z)
    }

    fn frame_is_flat(&self) -> bool {
        self.flat
    }
}

pub fn check_fiber_shape<F: FlatFrameStructure + ?Sized>(s: &F, fiber: &Fiber) -> Result<()> {
    let Order { n, m, .. } = s.order();
    let mu = s.mu();
    let bad = |what: String| Err(Error::Schema(what));
    if fiber.higgs.len() != n {
        return bad(format!("{} Higgs matrices for n = {n}", fiber.higgs.len()));
    }
    if fiber.higgs.iter().any(|c| c.shape() != (mu, mu)) {
        return bad(format!("Higgs matrices must be {mu}×{mu}"));
    }
    if fiber.unit.len() != mu {
        return bad(format!("unit section has {} entries, μ = {mu}", fiber.unit.len()));
    }
    match &fiber.form {
        FormTensor::Diagonal(w) if w.len() != mu => bad(format!("{} diagonal weights, μ = {mu}", w.len())),
        FormTensor::Dense { mu: fm, m: fmm, entries }
            if *fm != mu || *fmm != m || entries.len() != mu.pow(m as u32) =>
        {
            bad("dense form has the wrong shape".into())
        }
        _ => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrobeniusOptions {
    pub fd: FdOptions,
    /// Relative tolerance for spreads and flatness of coefficients.
    pub tolerance: f64,
    /// Axiom residuals above this make [`verify_axioms`] fail.
    pub hard_threshold: f64,
    pub exec: Execution,
    /// Number of random sample points besides the basepoint.
    pub samples: usize,
    /// Sample radius relative to `1 + max |x_i|`.
    pub sample_radius: f64,
    pub seed: u64,
    pub good_bound: usize,
    pub strong_bound: usize,
}

impl Default for FrobeniusOptions {
    fn default() -> Self {
        FrobeniusOptions {
            fd: FdOptions::default(),
            tolerance: 1e-6,
            hard_threshold: 1e-5,
            exec: Execution::default(),
            samples: 4,
            sample_radius: 1e-2,
            seed: 0x5eed,
            good_bound: crate::systems::DEFAULT_GOOD_BOUND,
            strong_bound: crate::systems::DEFAULT_STRONG_BOUND,
        }
    }
}

/// The basepoint followed by `opts.samples` points in a real polydisc around it.
pub fn sample_points(x: &[C64], opts: &FrobeniusOptions) -> Vec<Vec<C64>> {
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let radius = opts.sample_radius * (1.0 + scale);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = vec![x.to_vec()];
    for _ in 0..opts.samples {
        out.push(
            x.iter()
                .map(|&xi| xi + C64::new(rng.random_range(-radius..radius), 0.0))
                .collect(),
        );
    }
    out
}

fn system_context<F: FlatFrameStructure + ?Sized>(s: &F, opts: &FrobeniusOptions) -> Result<SystemContext> {
    Ok(SystemContext::new(s.matroid(), s.order().m)?.with_bounds(opts.good_bound, opts.strong_bound))
}

/// Sets `I_1, ..., I_μ` whose sections `C_Iζ` form a flat frame.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FlatFrame {
    /// Empty when the working frame is flat.
    pub sets: Vec<ElementSet>,
}

const RANK_TOLERANCE: f64 = 1e-9;

fn numerical_rank(columns: &[DVector<C64>]) -> usize {
    if columns.is_empty() {
        return 0;
    }
    let mat = DMatrix::from_columns(columns);
    let sv = mat.svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * top).count()
}

/// Rank of the span of all `C_Iζ` at the basepoint (the generation condition asks for `μ`).
pub fn generation_rank<F: FlatFrameStructure + ?Sized>(s: &F) -> Result<usize> {
    let fiber = s.fiber(s.basepoint())?;
    let sections: Vec<_> = s
        .matroid()
        .bases()
        .into_iter()
        .map(|b| fiber.set_section(b))
        .collect();
    Ok(numerical_rank(&sections))
}

pub fn flat_frame<F: FlatFrameStructure + ?Sized>(s: &F) -> Result<FlatFrame> {
    if s.frame_is_flat() {
        return Ok(FlatFrame { sets: Vec::new() });
    }
    let fiber = s.fiber(s.basepoint())?;
    let mut chosen: Vec<ElementSet> = Vec::new();
    let mut columns: Vec<DVector<C64>> = Vec::new();
    for b in s.matroid().bases() {
        let v = fiber.set_section(b);
        columns.push(v);
        if numerical_rank(&columns) == columns.len() {
            chosen.push(b);
            if chosen.len() == s.mu() {
                return Ok(FlatFrame { sets: chosen });
            }
        } else {
            columns.pop();
        }
    }
    Err(Error::Unsupported(format!(
        "the sections C_Iζ span only {} of {} dimensions, so they do not determine a flat frame",
        chosen.len(),
        s.mu()
    )))
}

/// `Φ(z)` and its inverse for the given frame.
fn frame_matrices(fiber: &Fiber, frame: &FlatFrame) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    if frame.sets.is_empty() {
        let id = DMatrix::identity(fiber.mu(), fiber.mu());
        return Ok((id.clone(), id));
    }
    let cols: Vec<_> = frame.sets.iter().map(|&b| fiber.set_section(b)).collect();
    let phi = DMatrix::from_columns(&cols);
    let inv = phi
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::StructureInvalid("the flat frame degenerates".into()))?;
    Ok((phi, inv))
}

fn flatten(m: &DMatrix<C64>) -> impl Iterator<Item = C64> + '_ {
    m.iter().copied()
}

fn max_abs(v: impl IntoIterator<Item = C64>) -> f64 {
    v.into_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Every multi-index in `{0..mu}^m`, row-major.
fn index_tuples(mu: usize, m: usize) -> Vec<Vec<usize>> {
    let total = mu.pow(m as u32);
    (0..total)
        .map(|mut idx| {
            let mut t = vec![0; m];
            for r in (0..m).rev() {
                t[r] = idx % mu;
                idx /= mu;
            }
            t
        })
        .collect()
}

fn basis_vector(mu: usize, a: usize) -> DVector<C64> {
    let mut v = DVector::zeros(mu);
    v[a] = C64::new(1.0, 0.0);
    v
}

/// Maximal residuals of the axioms over the sample points.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub samples: usize,
    /// `max ‖[C_i, C_j]‖`.
    pub commutativity: f64,
    /// `max ‖∂_i Ĉ_j - ∂_j Ĉ_i‖` in the flat frame.
    pub integrability: f64,
    /// `max |S(.., C_i s_r, ..) - S(C_i s_1, ..)|` on basis vectors.
    pub higgs_invariance: f64,
    /// `max ‖∂_i (Φ⁻¹ C_Iζ)‖` over maximal independent `I`.
    pub section_flatness: f64,
    /// `max |∂_i S(Φe_{a_1}, ..., Φe_{a_m})|`.
    pub form_flatness: f64,
    /// Deviation from symmetry in the slots; reported only.
    pub symmetry: f64,
    pub frame: FlatFrame,
}

impl AxiomReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.commutativity,
            self.integrability,
            self.higgs_invariance,
            self.section_flatness,
            self.form_flatness,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Flat-frame data at `z` flattened for finite differences: Higgs matrices, then sections of
/// all bases, then the form entries.
fn flat_data<F: FlatFrameStructure + ?Sized>(
    s: &F,
    frame: &FlatFrame,
    bases: &[ElementSet],
    z: &[C64],
) -> Result<Vec<C64>> {
    let fiber = s.fiber(z)?;
    let (phi, inv) = frame_matrices(&fiber, frame)?;
    let mut out = Vec::new();
    for c in &fiber.higgs {
        out.extend(flatten(&(&inv * c * &phi)));
    }
    for &b in bases {
        out.extend((&inv * fiber.set_section(b)).iter().copied());
    }
    let mu = fiber.mu();
    let m = s.order().m;
    let cols: Vec<DVector<C64>> = (0..mu).map(|a| phi.column(a).into_owned()).collect();
    for t in index_tuples(mu, m) {
        let args: Vec<_> = t.iter().map(|&a| cols[a].clone()).collect();
        out.push(fiber.form.eval(&args));
    }
    Ok(out)
}

/// Residuals of all axioms at the basepoint and the given samples; never fails on large
/// residuals.
pub fn axiom_report<F: FlatFrameStructure + ?Sized>(
    s: &F,
    samples: &[Vec<C64>],
    opts: &FrobeniusOptions,
) -> Result<AxiomReport> {
    let Order { n, m, .. } = s.order();
    let mu = s.mu();
    let frame = flat_frame(s)?;
    let bases = s.matroid().bases();
    let mut report = AxiomReport {
        samples: samples.len(),
        frame: frame.clone(),
        ..AxiomReport::default()
    };
    let tuples = index_tuples(mu, m);
    let per_sample = try_par_map(opts.exec, samples, |z| -> Result<AxiomReport> {
        let fiber = s.fiber(z)?;
        check_fiber_shape(s, &fiber)?;
        let mut r = AxiomReport::default();
        for i in 0..n {
            for j in i + 1..n {
                let comm = &fiber.higgs[i] * &fiber.higgs[j] - &fiber.higgs[j] * &fiber.higgs[i];
                r.commutativity = r.commutativity.max(max_abs(flatten(&comm)));
            }
        }
        for t in &tuples {
            let args: Vec<_> = t.iter().map(|&a| basis_vector(mu, a)).collect();
            let plain = fiber.form.eval(&args);
            for slot in 1..m {
                let mut swapped = args.clone();
                swapped.swap(0, slot);
                r.symmetry = r.symmetry.max((fiber.form.eval(&swapped) - plain).norm());
            }
            for c in &fiber.higgs {
                let mut first = args.clone();
                first[0] = c * &args[0];
                let reference = fiber.form.eval(&first);
                for slot in 1..m {
                    let mut moved = args.clone();
                    moved[slot] = c * &args[slot];
                    r.higgs_invariance = r.higgs_invariance.max((fiber.form.eval(&moved) - reference).norm());
                }
            }
        }
        let data = |w: &[C64]| flat_data(s, &frame, &bases, w);
        let grad = fd::gradient(&data, z, &opts.fd)?;
        let block = mu * mu;
        for i in 0..n {
            for j in i + 1..n {
                let dij = &grad[i][j * block..(j + 1) * block];
                let dji = &grad[j][i * block..(i + 1) * block];
                r.integrability = r
                    .integrability
                    .max(max_abs(dij.iter().zip(dji).map(|(a, b)| a - b)));
            }
        }
        let sections_end = n * block + bases.len() * mu;
        for g in &grad {
            r.section_flatness = r.section_flatness.max(max_abs(g[n * block..sections_end].iter().copied()));
            r.form_flatness = r.form_flatness.max(max_abs(g[sections_end..].iter().copied()));
        }
        Ok(r)
    })?;
    for r in per_sample {
        report.commutativity = report.commutativity.max(r.commutativity);
        report.integrability = report.integrability.max(r.integrability);
        report.higgs_invariance = report.higgs_invariance.max(r.higgs_invariance);
        report.section_flatness = report.section_flatness.max(r.section_flatness);
        report.form_flatness = report.form_flatness.max(r.form_flatness);
        report.symmetry = report.symmetry.max(r.symmetry);
    }
    Ok(report)
}

/// [`axiom_report`], failing with a structure-invalid error above `opts.hard_threshold`.
pub fn verify_axioms<F: FlatFrameStructure + ?Sized>(
    s: &F,
    samples: &[Vec<C64>],
    opts: &FrobeniusOptions,
) -> Result<AxiomReport> {
    let report = axiom_report(s, samples, opts)?;
    if report.max_violation() > opts.hard_threshold {
        return Err(Error::StructureInvalid(format!(
            "axiom residual {:e} exceeds {:e}: {report:?}",
            report.max_violation(),
            opts.hard_threshold
        )));
    }
    Ok(report)
}

/// `z ↦ S(C_{T}ζ, ζ, ..., ζ)`.
pub fn form_of_system<F: FlatFrameStructure + ?Sized>(s: &F, t: &System, z: &[C64]) -> Result<C64> {
    Ok(s.fiber(z)?.form_on_sections(std::slice::from_ref(t), s.order().m))
}

/// The potential of the first kind, homogeneous of degree `mk` in `z`.
pub fn build_q<F: FlatFrameStructure + ?Sized>(s: &F, opts: &FrobeniusOptions) -> Result<Polynomial> {
    let Order { n, k, m } = s.order();
    let ctx = system_context(s, opts)?;
    let candidates = systems_of_size(n, m * k);
    if candidates.len() > opts.good_bound {
        return Err(Error::SizeBound {
            what: "mk-systems",
            size: candidates.len(),
            bound: opts.good_bound,
        });
    }
    let samples = sample_points(s.basepoint(), opts);
    let fibers: Vec<Fiber> = samples.iter().map(|z| s.fiber(z)).collect::<Result<_>>()?;
    let strong = try_par_map(opts.exec, &candidates, |t| ctx.is_strong(t))?;
    let mut q = Polynomial::new(vec![C64::default(); n]);
    for (t, is_strong) in candidates.into_iter().zip(strong) {
        if !is_strong {
            continue;
        }
        let values: Vec<C64> = fibers
            .iter()
            .map(|f| f.form_on_sections(std::slice::from_ref(&t), m))
            .collect();
        let spread = values.iter().map(|v| (v - values[0]).norm()).fold(0.0, f64::max);
        if spread > opts.tolerance * (1.0 + values[0].norm()) {
            return Err(Error::Flatness(format!(
                "S(C_Tζ, ζ, ...) for T = {t} varies by {spread:e} over the samples"
            )));
        }
        q.add_term(t.clone(), values[0] / t.factorial());
    }
    Ok(q)
}

/// All ordered `m`-tuples of bases, as systems.
fn base_tuples(ctx: &SystemContext, bound: usize) -> Result<Vec<Vec<System>>> {
    let count = ctx.bases().len().checked_pow(ctx.m() as u32).unwrap_or(usize::MAX);
    if count > bound {
        return Err(Error::SizeBound {
            what: "tuples of bases",
            size: count,
            bound,
        });
    }
    let mut out: Vec<Vec<System>> = vec![Vec::new()];
    for _ in 0..ctx.m() {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                ctx.bases().iter().map(move |b| {
                    let mut p = prefix.clone();
                    p.push(b.clone());
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

fn sum_systems(n: usize, parts: &[System]) -> System {
    parts.iter().fold(System::zeros(n), |acc, p| acc.plus(p))
}

/// `max |∂_{I_1}...∂_{I_m}Q - S(C_{I_1}ζ, ..., C_{I_m}ζ)(x)|` over ordered tuples of bases.
pub fn check_first_kind<F: FlatFrameStructure + ?Sized>(
    s: &F,
    q: &Polynomial,
    opts: &FrobeniusOptions,
) -> Result<f64> {
    let Order { n, m, .. } = s.order();
    let ctx = system_context(s, opts)?;
    let fiber = s.fiber(s.basepoint())?;
    let mut worst: f64 = 0.0;
    for tuple in base_tuples(&ctx, opts.good_bound)? {
        let t = sum_systems(n, &tuple);
        let derivative = q.derivative(&t);
        // The derivative is a constant; evaluate it anywhere.
        let lhs = derivative.eval(s.basepoint());
        let rhs = fiber.form_on_sections(&tuple, m);
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    #[serde(rename = "T1")]
    pub t1: System,
    #[serde(rename = "T2")]
    pub t2: System,
    pub value: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientRecord {
    #[serde(rename = "T")]
    pub system: System,
    pub value: C64,
    pub candidates: Vec<Candidate>,
    /// `max |c_i - c_j|` over the candidates.
    pub spread: f64,
}

/// The potential of the second kind up to total degree `n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedPotential {
    pub polynomial: Polynomial,
    pub n_max: usize,
    /// One record per `T` that has good decompositions.
    pub records: Vec<CoefficientRecord>,
    pub spread_max: f64,
}

/// The candidate `(1/T!)·∂_{T1} S(C_{T2}ζ, ζ, ..., ζ)(x)` of a good decomposition.
pub fn coefficient_candidate<F: FlatFrameStructure + ?Sized>(
    s: &F,
    d: &GoodDecomposition,
    opts: &FrobeniusOptions,
) -> Result<C64> {
    let g = |z: &[C64]| form_of_system(s, &d.t2, z);
    let derivative = fd::partial_scalar(&g, s.basepoint(), &d.t1, &opts.fd)?;
    Ok(derivative / d.total().factorial())
}

fn coefficient_record<F: FlatFrameStructure + ?Sized>(
    s: &F,
    ctx: &SystemContext,
    t: &System,
    opts: &FrobeniusOptions,
) -> Result<Option<CoefficientRecord>> {
    let goods = ctx.good_decompositions(t)?;
    if goods.is_empty() {
        return Ok(None);
    }
    let mut candidates = Vec::with_capacity(goods.len());
    for d in goods {
        let value = coefficient_candidate(s, &d, opts)?;
        candidates.push(Candidate {
            t1: d.t1,
            t2: d.t2,
            value,
        });
    }
    let mean = candidates.iter().map(|c| c.value).sum::<C64>() / candidates.len() as f64;
    let mut spread: f64 = 0.0;
    for a in &candidates {
        for b in &candidates {
            spread = spread.max((a.value - b.value).norm());
        }
    }
    if spread > opts.tolerance * mean.norm().max(1.0) {
        return Err(Error::WellDefinedness {
            system: t.as_slice().to_vec(),
            spread,
            tolerance: opts.tolerance,
        });
    }
    Ok(Some(CoefficientRecord {
        system: t.clone(),
        value: mean,
        candidates,
        spread,
    }))
}

pub fn build_l<F: FlatFrameStructure + ?Sized>(
    s: &F,
    n_max: usize,
    opts: &FrobeniusOptions,
) -> Result<TruncatedPotential> {
    let Order { n, k, m } = s.order();
    if n_max < m * k + 1 {
        return Err(Error::Precondition(format!("N_max = {n_max} is below mk + 1 = {}", m * k + 1)));
    }
    let ctx = system_context(s, opts)?;
    let mut systems = Vec::new();
    for size in m * k + 1..=n_max {
        systems.extend(systems_of_size(n, size));
        if systems.len() > opts.good_bound {
            return Err(Error::SizeBound {
                what: "systems up to N_max",
                size: systems.len(),
                bound: opts.good_bound,
            });
        }
    }
    let records = try_par_map(opts.exec, &systems, |t| coefficient_record(s, &ctx, t, opts))?;
    let mut polynomial = Polynomial::new(s.basepoint().to_vec());
    let mut kept = Vec::new();
    let mut spread_max: f64 = 0.0;
    for r in records.into_iter().flatten() {
        polynomial.add_term(r.system.clone(), r.value);
        spread_max = spread_max.max(r.spread);
        kept.push(r);
    }
    Ok(TruncatedPotential {
        polynomial,
        n_max,
        records: kept,
        spread_max,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SecondKindCheck {
    /// `max |∂_i∂_{I_1}...∂_{I_m}L(x) - S(C_iC_{I_1}ζ, ..., C_{I_m}ζ)(x)|`.
    pub at_basepoint: f64,
    /// The same identity after a further `∂_V`, `|V| >= 1`, with the right side differentiated
    /// numerically; covers every `V` allowed by the truncation.
    pub higher: f64,
    pub checked: usize,
}

pub fn check_second_kind<F: FlatFrameStructure + ?Sized>(
    s: &F,
    l: &TruncatedPotential,
    opts: &FrobeniusOptions,
) -> Result<SecondKindCheck> {
    let Order { n, m, .. } = s.order();
    let ctx = system_context(s, opts)?;
    let x = s.basepoint();
    let mut jobs = Vec::new();
    for i in 0..n {
        for tuple in base_tuples(&ctx, opts.good_bound)? {
            let mut args = tuple.clone();
            args[0] = args[0].plus_unit(i);
            let t = sum_systems(n, &args);
            if t.size() > l.n_max {
                continue;
            }
            for extra in 0..=l.n_max - t.size() {
                for v in systems_of_size(n, extra) {
                    jobs.push((args.clone(), t.clone(), v));
                }
            }
        }
    }
    let residuals = try_par_map(opts.exec, &jobs, |(args, t, v)| -> Result<(bool, f64)> {
        let lhs = l.polynomial.derivative_at_center(&t.plus(v));
        let g = |z: &[C64]| Ok(s.fiber(z)?.form_on_sections(args, m));
        let rhs = fd::partial_scalar(&g, x, v, &opts.fd)?;
        Ok((v.size() == 0, (lhs - rhs).norm()))
    })?;
    let mut out = SecondKindCheck {
        checked: residuals.len(),
        ..SecondKindCheck::default()
    };
    for (at_x, r) in residuals {
        if at_x {
            out.at_basepoint = out.at_basepoint.max(r);
        } else {
            out.higher = out.higher.max(r);
        }
    }
    Ok(out)
}

/// `|∂_b S(C_{T2}ζ, ζ, ...) - ∂_a S(C_{S2}ζ, ζ, ...)|(x)` with `S2 = T2 + [b] - [a]`, the single
/// move behind the agreement of candidates of locally related decompositions. `a` and `b`
/// are 0-based.
pub fn flat_step_identity_check<F: FlatFrameStructure + ?Sized>(
    s: &F,
    t2: &System,
    a: usize,
    b: usize,
    opts: &FrobeniusOptions,
) -> Result<f64> {
    let Order { n, k, m } = s.order();
    for label in [a, b] {
        if label >= n {
            return Err(Error::Domain { label: label + 1, n });
        }
    }
    if t2.n() != n || t2.size() != m * k + 1 {
        return Err(Error::Arity {
            expected: m * k + 1,
            actual: t2.size(),
        });
    }
    let ctx = system_context(s, opts)?;
    if ctx.decomposition_with_remainder(t2, &System::unit(n, a))?.is_none() {
        return Err(Error::Precondition(format!(
            "{t2} has no strong decomposition with remainder [{}]",
            a + 1
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let s2 = t2.plus_unit(b).minus_unit(a).expect("T2(a) > 0");
    let x = s.basepoint();
    let left = fd::partial_scalar(&|z: &[C64]| form_of_system(s, t2, z), x, &System::unit(n, b), &opts.fd)?;
    let right = fd::partial_scalar(&|z: &[C64]| form_of_system(s, &s2, z), x, &System::unit(n, a), &opts.fd)?;
    Ok((left - right).norm())
}
