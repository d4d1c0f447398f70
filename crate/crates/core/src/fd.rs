//! Mixed partial derivatives by central finite differences.
//!
//! `∂_T f(x)` for a multi-index `T` uses the tensor product of one-dimensional central
//! stencils `δ^c f = Σ_r (-1)^r C(c,r) f(x + (c/2 - r)h)`, which is accurate to `O(h²)`.
//! Richardson extrapolation `(4 D(h/2) - D(h)) / 3` lifts that to `O(h⁴)`.
//!
//! Functions are holomorphic in `z ∈ C^n`, so stepping along the real axis of each coordinate
//! gives the complex partial derivative.

use num_complex::Complex64;

use crate::error::Result;
use crate::systems::System;

pub type C64 = Complex64;

pub const DEFAULT_RELATIVE_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdOptions {
    /// Relative base step; the absolute first-order step is `h·(1 + max_i |x_i|)`.
    pub h: f64,
    pub richardson: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            h: DEFAULT_RELATIVE_STEP,
            richardson: true,
        }
    }
}

impl FdOptions {
    pub fn base_step(&self, x: &[C64]) -> f64 {
        let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.h * (1.0 + scale)
    }

    /// Step for a derivative of total order `p`.
    ///
    /// Rounding error grows like `ε/h^p`, so higher orders need larger steps; the factors keep
    /// the rounding part near `1e-9` relative for `p <= 3` at the default base step.
    pub fn step_for_order(&self, x: &[C64], p: usize) -> f64 {
        let factor = match p {
            0 | 1 => 1.0,
            2 => 50.0,
            3 => 200.0,
            _ => 500.0,
        };
        self.base_step(x) * factor
    }
}

fn binomial(c: u32, r: u32) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * f64::from(c - i) / f64::from(i + 1))
}

/// Stencil points (as offsets in units of `h`) and weights for `∂_T`.
fn stencil(t: &System) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(vec![0.0; t.n()], 1.0)];
    for (i, &c) in t.as_slice().iter().enumerate() {
        if c == 0 {
            continue;
        }
        let mut next = Vec::with_capacity(out.len() * (c as usize + 1));
        for (offset, weight) in &out {
            for r in 0..=c {
                let mut o = offset.clone();
                o[i] = f64::from(c) / 2.0 - f64::from(r);
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                next.push((o, weight * sign * binomial(c, r)));
            }
        }
        out = next;
    }
    out
}

fn central<F>(f: &F, x: &[C64], t: &System, h: f64) -> Result<Vec<C64>>
where
    F: Fn(&[C64]) -> Result<Vec<C64>>,
{
    let p = t.size() as i32;
    let mut acc: Option<Vec<C64>> = None;
    let mut z = x.to_vec();
    for (offset, weight) in stencil(t) {
        for (zi, (xi, o)) in z.iter_mut().zip(x.iter().zip(&offset)) {
            *zi = xi + o * h;
        }
        let value = f(&z)?;
        match &mut acc {
            None => acc = Some(value.into_iter().map(|v| v * weight).collect()),
            Some(a) => {
                for (ai, vi) in a.iter_mut().zip(value) {
                    *ai += vi * weight;
                }
            }
        }
    }
    let scale = h.powi(p);
    Ok(acc
        .unwrap_or_default()
        .into_iter()
        .map(|v| v / scale)
        .collect())
}

/// `∂_T f(x)` for a vector-valued `f`.
pub fn partial<F>(f: &F, x: &[C64], t: &System, opts: &FdOptions) -> Result<Vec<C64>>
where
    F: Fn(&[C64]) -> Result<Vec<C64>>,
{
    let p = t.size();
    if p == 0 {
        return f(x);
    }
    let h = opts.step_for_order(x, p);
    let coarse = central(f, x, t, h)?;
    if !opts.richardson {
        return Ok(coarse);
    }
    let fine = central(f, x, t, h / 2.0)?;
    Ok(fine
        .into_iter()
        .zip(coarse)
        .map(|(a, b)| (a * 4.0 - b) / 3.0)
        .collect())
}

/// `∂_T f(x)` for a scalar `f`.
pub fn partial_scalar<F>(f: &F, x: &[C64], t: &System, opts: &FdOptions) -> Result<C64>
where
    F: Fn(&[C64]) -> Result<C64>,
{
    let wrapped = |z: &[C64]| f(z).map(|v| vec![v]);
    Ok(partial(&wrapped, x, t, opts)?[0])
}

/// All first partials `∂_1 f(x), ..., ∂_n f(x)`.
pub fn gradient<F>(f: &F, x: &[C64], opts: &FdOptions) -> Result<Vec<Vec<C64>>>
where
    F: Fn(&[C64]) -> Result<Vec<C64>>,
{
    (0..x.len())
        .map(|i| partial(f, x, &System::unit(x.len(), i), opts))
        .collect()
}
