//! Input documents, one per subcommand. Unknown fields are rejected.

use frobenius_like::arrangements::ArrangementData;
use frobenius_like::fd::C64;
use frobenius_like::matroid::{Matroid, MatroidSpec, RationalEntry};
use frobenius_like::systems::System;
use frobenius_like::{ElementSet, Error, Result};
use serde::Deserialize;
use std::sync::Arc;

/// A complex number: a plain number or `[re, im]`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum ComplexEntry {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexEntry {
    pub fn value(self) -> C64 {
        match self {
            ComplexEntry::Real(re) => C64::new(re, 0.0),
            ComplexEntry::Pair([re, im]) => C64::new(re, im),
        }
    }
}

fn build(spec: &MatroidSpec) -> Result<Arc<dyn Matroid>> {
    spec.build()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatroidInput {
    pub matroid: MatroidSpec,
    /// Defaults to the whole ground set.
    #[serde(default)]
    pub set: Option<Vec<usize>>,
}

impl MatroidInput {
    pub fn matroid(&self) -> Result<Arc<dyn Matroid>> {
        build(&self.matroid)
    }
}

pub fn labels_to_set(labels: &[usize], n: usize) -> Result<ElementSet> {
    ElementSet::try_from_labels(labels, n)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionInput {
    pub ground: usize,
    #[serde(default)]
    pub domain: Option<Vec<usize>>,
    pub matroids: Vec<MatroidSpec>,
}

impl PartitionInput {
    pub fn matroids(&self) -> Result<Vec<Arc<dyn Matroid>>> {
        self.matroids.iter().map(build).collect()
    }
}

/// `others` are the matroids besides the uniform tail `U_{l,|E|}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailInput {
    pub ground: usize,
    #[serde(default)]
    pub domain: Option<Vec<usize>>,
    pub others: Vec<MatroidSpec>,
    pub l: usize,
}

impl TailInput {
    pub fn others(&self) -> Result<Vec<Arc<dyn Matroid>>> {
        self.others.iter().map(build).collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemInput {
    pub matroid: MatroidSpec,
    pub m: usize,
    #[serde(rename = "T")]
    pub t: Vec<u32>,
}

impl SystemInput {
    pub fn matroid(&self) -> Result<Arc<dyn Matroid>> {
        build(&self.matroid)
    }

    pub fn system(&self) -> System {
        System::from_vec(self.t.clone())
    }
}

fn default_m() -> usize {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrangementInput {
    /// `n × k` rational matrix, row `i` is `b_i`.
    #[serde(rename = "B")]
    pub b: Vec<Vec<RationalEntry>>,
    pub a: Vec<ComplexEntry>,
    pub x: Vec<ComplexEntry>,
    #[serde(default = "default_m")]
    pub m: usize,
}

impl ArrangementInput {
    pub fn data(&self) -> Result<ArrangementData> {
        let b = self
            .b
            .iter()
            .map(|row| row.iter().map(RationalEntry::to_rational).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let a = self.a.iter().map(|c| c.value()).collect();
        let x = self.x.iter().map(|c| c.value()).collect();
        ArrangementData::new(b, a, x)
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
}
