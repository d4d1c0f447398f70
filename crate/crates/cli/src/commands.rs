use frobenius_like::arrangements::{verify_arrangement, ArrangementOptions, ArrangementStructure};
use frobenius_like::fd::C64;
use frobenius_like::frobenius::{build_l, build_q, check_first_kind, check_second_kind, FlatFrameStructure, FrobeniusOptions};
use frobenius_like::matroid::MatroidExt;
use frobenius_like::partition::{PartitionOutcome, PartitionProblem, UniformTailProblem};
use frobenius_like::systems::{BaseMatching, SystemContext};
use frobenius_like::{ElementSet, Error, Execution, Result};
use serde_json::{json, Value};

use crate::input::{
    labels_to_set, parse, ArrangementInput, MatroidInput, PartitionInput, SystemInput, TailInput,
};

/// Numeric options shared by all subcommands, already validated.
#[derive(Clone, Debug)]
pub struct Settings {
    pub frobenius: FrobeniusOptions,
    pub arrangement: ArrangementOptions,
    pub n_max: Option<usize>,
    pub matching: BaseMatching,
    pub exec: Execution,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable output")
}

fn complex(c: C64) -> Value {
    json!([c.re, c.im])
}

fn context(input: &SystemInput, s: &Settings) -> Result<SystemContext> {
    Ok(SystemContext::new(input.matroid()?, input.m)?
        .with_bounds(s.frobenius.good_bound, s.frobenius.strong_bound))
}

pub fn matroid_rank(text: &str) -> Result<Value> {
    let input: MatroidInput = parse(text)?;
    let m = input.matroid()?;
    let set = match &input.set {
        Some(labels) => labels_to_set(labels, m.ground_size())?,
        None => ElementSet::full(m.ground_size()),
    };
    Ok(json!({ "ground": m.ground_size(), "set": set, "rank": m.rank(set)? }))
}

pub fn matroid_bases(text: &str) -> Result<Value> {
    let input: MatroidInput = parse(text)?;
    if input.set.is_some() {
        return Err(Error::Schema("`set` is not used by `matroid bases`".into()));
    }
    let m = input.matroid()?;
    let bases = m.bases();
    Ok(json!({ "ground": m.ground_size(), "rank": m.full_rank(), "count": bases.len(), "bases": bases }))
}

pub fn partition(text: &str) -> Result<Value> {
    let input: PartitionInput = parse(text)?;
    let matroids = input.matroids()?;
    let problem = match &input.domain {
        Some(labels) => PartitionProblem::on_domain(input.ground, labels_to_set(labels, input.ground)?, matroids)?,
        None => PartitionProblem::new(input.ground, matroids)?,
    };
    Ok(match problem.solve()? {
        PartitionOutcome::Certificate(c) => {
            problem.validate_certificate(&c)?;
            json!({ "outcome": "certificate", "parts": c.parts })
        }
        PartitionOutcome::Witness(w) => {
            problem.validate_witness(&w)?;
            json!({ "outcome": "witness", "witness": w })
        }
    })
}

pub fn amin(text: &str, s: &Settings) -> Result<Value> {
    let input: TailInput = parse(text)?;
    let domain = match &input.domain {
        Some(labels) => labels_to_set(labels, input.ground)?,
        None => ElementSet::full(input.ground),
    };
    let tail = UniformTailProblem::new(input.ground, domain, input.others()?, input.l)?;
    let a_min = tail.a_min()?;
    let a_par = tail.a_par(s.exec)?;
    Ok(json!({
        "l": input.l,
        "g_family": tail.g_family()?,
        "a_min": a_min,
        "a_par": a_par,
        "agree": a_min == a_par,
    }))
}

pub fn equivalence(text: &str, s: &Settings) -> Result<Value> {
    let input: SystemInput = parse(text)?;
    let ctx = context(&input, s)?;
    let report = ctx.equivalence_report_with(&input.system(), s.exec, s.matching)?;
    let mut v = to_value(&report);
    v["matching"] = json!(match s.matching {
        BaseMatching::Unordered => "unordered",
        BaseMatching::Strict => "strict",
    });
    Ok(v)
}

pub fn strong_decompose(text: &str, s: &Settings) -> Result<Value> {
    let input: SystemInput = parse(text)?;
    let ctx = context(&input, s)?;
    let t = input.system();
    let l = ctx.remainder_size(&t)?;
    let decomposition = ctx.strong_decomposition(&t, l)?;
    let witness = ctx.capacity_violation(&t, l)?;
    let (a_dec, a_min) = if decomposition.is_some() && l >= 1 {
        (to_value(&ctx.a_dec(&t, s.exec)?), to_value(&ctx.a_min(&t)?))
    } else {
        (Value::Null, Value::Null)
    };
    Ok(json!({
        "T": t,
        "l": l,
        "strong": decomposition.is_some(),
        "decomposition": decomposition,
        "capacity_witness": witness,
        "a_dec": a_dec,
        "a_min": a_min,
    }))
}

fn structure(text: &str, s: &Settings) -> Result<ArrangementStructure> {
    let input: ArrangementInput = parse(text)?;
    ArrangementStructure::new(input.data()?, input.m, s.arrangement)
}

pub fn potentials(text: &str, s: &Settings) -> Result<Value> {
    let st = structure(text, s)?;
    let order = st.order();
    let opts = &s.frobenius;
    let n_max = s.n_max.unwrap_or(order.m * order.k + 3);
    let q = build_q(&st, opts)?;
    let first_kind = check_first_kind(&st, &q, opts)?;
    let l = build_l(&st, n_max, opts)?;
    let second_kind = check_second_kind(&st, &l, opts)?;
    let q_terms: Vec<Value> = q
        .terms()
        .map(|(t, &c)| json!({ "T": t, "coefficient": complex(c) }))
        .collect();
    let l_terms: Vec<Value> = l
        .records
        .iter()
        .map(|r| {
            json!({
                "T": r.system,
                "coefficient": complex(r.value),
                "candidates": r.candidates.len(),
                "spread": r.spread,
            })
        })
        .collect();
    Ok(json!({
        "order": order,
        "basepoint": st.basepoint().iter().map(|&c| complex(c)).collect::<Vec<_>>(),
        "Q": { "terms": q_terms, "first_kind_residual": first_kind },
        "L": {
            "n_max": n_max,
            "terms": l_terms,
            "spread_max": l.spread_max,
            "second_kind": second_kind,
        },
    }))
}

pub fn verify(text: &str, s: &Settings) -> Result<Value> {
    let st = structure(text, s)?;
    Ok(to_value(&verify_arrangement(&st, &s.frobenius)?))
}
