//! All roots of a univariate complex polynomial by the Aberth–Ehrlich iteration.
//!
//! Coefficients are in ascending order: `p(t) = c[0] + c[1] t + ... + c[d] t^d`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fd::C64;

const MAX_ITERATIONS: usize = 500;

/// `p·(c1 t + c0)`.
pub fn mul_linear(p: &[C64], c0: C64, c1: C64) -> Vec<C64> {
    let mut out = vec![C64::default(); p.len() + 1];
    for (i, &pi) in p.iter().enumerate() {
        out[i] += pi * c0;
        out[i + 1] += pi * c1;
    }
    out
}

/// `(p(t), p'(t))` by Horner's scheme.
pub fn eval_with_derivative(p: &[C64], t: C64) -> (C64, C64) {
    let mut value = C64::default();
    let mut derivative = C64::default();
    for &c in p.iter().rev() {
        derivative = derivative * t + value;
        value = value * t + c;
    }
    (value, derivative)
}

/// Drops leading coefficients that are negligible against the largest one.
pub fn trim(p: &[C64], relative: f64) -> &[C64] {
    let top = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut d = p.len();
    while d > 0 && p[d - 1].norm() <= relative * top {
        d -= 1;
    }
    &p[..d]
}

pub fn roots(p: &[C64]) -> Result<Vec<C64>> {
    let p = trim(p, 1e-14);
    if p.is_empty() {
        return Err(Error::Precondition("the zero polynomial has no isolated roots".into()));
    }
    let d = p.len() - 1;
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = p[d];
    let monic: Vec<C64> = p.iter().map(|c| c / lead).collect();
    if d == 1 {
        return Ok(vec![-monic[0]]);
    }
    // Cauchy bound for the starting circle; the angular offset avoids symmetric stalls.
    let radius = 1.0 + monic[..d].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..d)
        .map(|j| C64::from_polar(radius, 2.0 * PI * j as f64 / d as f64 + 0.4))
        .collect();
    for _ in 0..MAX_ITERATIONS {
        let mut worst: f64 = 0.0;
        for j in 0..d {
            let (v, dv) = eval_with_derivative(&monic, z[j]);
            if v == C64::default() {
                continue;
            }
            let ratio = v / dv;
            let repulsion: C64 = (0..d)
                .filter(|&l| l != j)
                .map(|l| (z[j] - z[l]).inv())
                .sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if !step.is_finite() {
                continue;
            }
            z[j] -= step;
            worst = worst.max(step.norm() / (1.0 + z[j].norm()));
        }
        if worst < 1e-15 {
            return Ok(z);
        }
    }
    // Slow convergence happens at (near) multiple roots; accept if residuals are small.
    let scale: f64 = monic.iter().map(|c| c.norm()).sum();
    let ok = z.iter().all(|&t| {
        let (v, _) = eval_with_derivative(&monic, t);
        v.norm() <= 1e-10 * scale * (1.0 + t.norm()).powi(d as i32)
    });
    if ok {
        Ok(z)
    } else {
        Err(Error::Continuation("root iteration did not converge".into()))
    }
}
