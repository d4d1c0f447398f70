//! Sparse polynomials in `z - x`, indexed by systems.
//!
//! A monomial `(z - x)^S` is stored under its exponent system `S`. Differentiation is exact:
//! `∂_T (z-x)^S = S!/(S-T)! · (z-x)^{S-T}` when `T <= S` and zero otherwise.

use std::collections::BTreeMap;

use crate::fd::C64;
use crate::systems::System;

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    center: Vec<C64>,
    coefficients: BTreeMap<System, C64>,
}

/// `S!/(S-T)!` for `T <= S`.
pub fn falling_factorial(s: &System, t: &System) -> f64 {
    s.as_slice()
        .iter()
        .zip(t.as_slice())
        .map(|(&si, &ti)| ((si - ti + 1)..=si).map(f64::from).product::<f64>())
        .product()
}

impl Polynomial {
    pub fn new(center: Vec<C64>) -> Self {
        Polynomial {
            center,
            coefficients: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[C64] {
        &self.center
    }

    /// Adds `c·(z-x)^S`; exact zeros are not stored.
    pub fn add_term(&mut self, s: System, c: C64) {
        assert_eq!(s.n(), self.n(), "exponent arity");
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let entry = self.coefficients.entry(s).or_default();
        *entry += c;
    }

    pub fn coefficient(&self, s: &System) -> C64 {
        self.coefficients.get(s).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&System, &C64)> {
        self.coefficients.iter()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// The common total degree of all stored monomials, if there is one.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degrees = self.coefficients.keys().map(System::size);
        let first = degrees.next()?;
        degrees.all(|d| d == first).then_some(first)
    }

    pub fn derivative(&self, t: &System) -> Polynomial {
        let mut out = Polynomial::new(self.center.clone());
        for (s, &c) in &self.coefficients {
            if let Some(rest) = s.minus(t) {
                out.add_term(rest, c * falling_factorial(s, t));
            }
        }
        out
    }

    /// `(∂_T P)(x)` at the center, i.e. `T!·coefficient(T)`.
    pub fn derivative_at_center(&self, t: &System) -> C64 {
        self.coefficient(t) * t.factorial()
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        let shifted: Vec<C64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.coefficients
            .iter()
            .map(|(s, &c)| {
                s.as_slice()
                    .iter()
                    .zip(&shifted)
                    .fold(c, |acc, (&e, &w)| acc * w.powu(e))
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(v: &[u32]) -> System {
        System::from_vec(v.to_vec())
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn derivative_rule() {
        let mut p = Polynomial::new(vec![c(0.0); 2]);
        p.add_term(sys(&[3, 1]), c(2.0));
        let d = p.derivative(&sys(&[2, 1]));
        // ∂1²∂2 (2 z1³ z2) = 12 z1
        assert_eq!(d.coefficient(&sys(&[1, 0])), c(12.0));
        assert!(p.derivative(&sys(&[0, 2])).is_empty());
        assert_eq!(falling_factorial(&sys(&[3, 1]), &sys(&[2, 1])), 6.0);
    }

    #[test]
    fn eval_around_center() {
        let mut p = Polynomial::new(vec![c(1.0), c(-1.0)]);
        p.add_term(sys(&[1, 1]), c(3.0));
        p.add_term(sys(&[0, 0]), c(0.5));
        // 3 (2 - 1)(0 + 1) + 0.5
        assert_eq!(p.eval(&[c(2.0), c(0.0)]), c(3.5));
        assert_eq!(p.derivative_at_center(&sys(&[1, 1])), c(3.0));
    }

    #[test]
    fn homogeneity() {
        let mut p = Polynomial::new(vec![c(0.0); 2]);
        assert_eq!(p.homogeneous_degree(), None);
        p.add_term(sys(&[2, 0]), c(1.0));
        p.add_term(sys(&[1, 1]), c(1.0));
        assert_eq!(p.homogeneous_degree(), Some(2));
        p.add_term(sys(&[1, 0]), c(1.0));
        assert_eq!(p.homogeneous_degree(), None);
    }

    #[test]
    fn zero_terms_are_dropped() {
        let mut p = Polynomial::new(vec![c(0.0)]);
        p.add_term(sys(&[4]), c(0.0));
        assert!(p.is_empty());
    }
}
