//! Machine-readable reports. Rationals are written as `"n"` or `"n/d"`
//! strings; objects have sorted keys, so equal inputs give equal bytes.

use std::fmt::Write as _;

use gptcast::composite::CompositeSpace;
use gptcast::decide::{DecisionReport, SimplexCover, Witness};
use gptcast::linalg::Matrix;
use gptcast::lp::{LpSystem, Relation, VarKind};
use gptcast::polytope::HRep;
use gptcast::scalar::{format_scalar, parse_scalar, Scalar, Show, Vector};
use gptcast::space::{Effect, Measurement, StateSpace};
use serde_json::{json, Value};

use crate::scenario::{CompositeChoice, Scenario};

pub const FORMAT: &str = "gptcast-report/1";

#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    /// Include wall-clock timings. Off by default so reports are reproducible.
    pub timings: bool,
}

pub fn scalar(x: &Scalar) -> Value {
    Value::String(format_scalar(x))
}

pub fn vector(v: &[Scalar]) -> Value {
    Value::Array(v.iter().map(scalar).collect())
}

pub fn vectors(vs: &[Vector]) -> Value {
    Value::Array(vs.iter().map(|v| vector(v)).collect())
}

pub fn matrix(m: &Matrix) -> Value {
    vectors(&m.row_vectors())
}

fn effects(m: &Measurement) -> Value {
    Value::Array(m.outcomes.iter().map(|e| vector(&e.0)).collect())
}

fn hrep(h: &HRep) -> Value {
    json!({
        "inequalities": h.inequalities.iter().map(|f| json!({"normal": vector(&f.normal), "offset": scalar(&f.offset)})).collect::<Vec<_>>(),
        "equalities": h.equalities.iter().map(|f| json!({"normal": vector(&f.normal), "offset": scalar(&f.offset)})).collect::<Vec<_>>(),
    })
}

pub fn space(s: &StateSpace) -> Value {
    json!({ "name": s.name(), "unit": vector(s.unit()), "vertices": vectors(s.vertices()) })
}

fn composite_choice(c: &CompositeChoice) -> Value {
    match c {
        CompositeChoice::Custom(h) => json!({ "variant": "custom", "hrep": hrep(h) }),
        other => json!({ "variant": other.variant().to_string() }),
    }
}

pub fn scenario(s: &Scenario) -> Value {
    let mut v = json!({
        "name": s.name,
        "task": s.task.as_str(),
        "composite": composite_choice(&s.composite),
        "states": vectors(&s.states),
    });
    if let Some(sp) = &s.space {
        v["space"] = space(sp);
    }
    if let Some(d) = &s.description {
        v["description"] = Value::String(d.clone());
    }
    v
}

fn relation(r: Relation) -> &'static str {
    match r {
        Relation::Le => "<=",
        Relation::Ge => ">=",
        Relation::Eq => "=",
    }
}

/// Variable kinds as runs `[kind, count]`, then constraints with sparse terms.
pub fn lp_system(sys: &LpSystem) -> Value {
    let mut runs: Vec<(VarKind, usize)> = Vec::new();
    for &k in sys.kinds() {
        match runs.last_mut() {
            Some((last, n)) if *last == k => *n += 1,
            _ => runs.push((k, 1)),
        }
    }
    let variables: Vec<Value> = runs
        .iter()
        .map(|(k, n)| json!([if *k == VarKind::Free { "free" } else { "nonnegative" }, n]))
        .collect();
    let constraints: Vec<Value> = sys
        .constraints()
        .iter()
        .map(|c| {
            let terms: Vec<Value> =
                c.coeffs.iter().enumerate().filter(|(_, a)| **a != Scalar::from_integer(0.into())).map(|(i, a)| json!([i, scalar(a)])).collect();
            json!({ "label": c.label, "relation": relation(c.relation), "rhs": scalar(&c.rhs), "terms": terms })
        })
        .collect();
    json!({ "variables": variables, "constraints": constraints })
}

fn sparse(v: &[Scalar]) -> Value {
    Value::Array(
        v.iter()
            .enumerate()
            .filter(|(_, x)| **x != Scalar::from_integer(0.into()))
            .map(|(i, x)| json!([i, scalar(x)]))
            .collect(),
    )
}

fn cover(c: &SimplexCover) -> Value {
    json!({
        "kind": "cover",
        "broadcaster": matrix(c.broadcaster.matrix()),
        "symmetrized": matrix(c.symmetrized.matrix()),
        "compression": matrix(c.compression.matrix()),
        "broadcast_set": vectors(c.broadcast_set.vertices()),
        "generators": vectors(&c.generators),
        "measurement": effects(&c.measurement),
        "weights": vectors(&c.weights),
        "gamma_is_simplex": c.gamma_is_simplex,
        "q_broadcasts_generators": c.q_broadcasts_generators,
    })
}

pub fn witness(w: &Witness) -> Value {
    match w {
        Witness::Measurement(m) => json!({ "kind": "measurement", "effects": effects(m) }),
        Witness::Channel(c) => json!({ "kind": "channel", "matrix": matrix(c.matrix()) }),
        Witness::Cover(c) => cover(c),
    }
}

/// The `result` object of a report.
pub fn decision(report: &DecisionReport, opts: ReportOptions) -> Value {
    let mut v = json!({
        "task": report.task.to_string(),
        "verdict": if report.verdict { "yes" } else { "no" },
        "states": vectors(report.subject.states()),
        "warnings": report.warnings,
        "cross_checks": report.cross_checks.iter().map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail})).collect::<Vec<_>>(),
        "witness": report.witness.as_ref().map_or(Value::Null, witness),
        "certificate": report.certificate.as_ref().map_or(Value::Null, |c| json!({
            "system": lp_system(&c.system),
            "multipliers": sparse(&c.farkas.multipliers),
        })),
    });
    if let Some(variant) = report.composite {
        v["composite"] = Value::String(variant.to_string());
    }
    if opts.timings {
        v["elapsed_ms"] = json!(report.elapsed.as_secs_f64() * 1e3);
    }
    v
}

pub fn document(scenario_value: Value, result: Value) -> Value {
    json!({ "format": FORMAT, "scenario": scenario_value, "result": result })
}

/// Pretty JSON with a trailing newline.
pub fn to_bytes(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("JSON values serialize");
    out.push(b'\n');
    out
}

/// Human-readable summary of a decision.
pub fn summary(report: &DecisionReport, composite: Option<&CompositeSpace>) -> String {
    let mut s = String::new();
    let space = report.subject.space();
    let _ = writeln!(s, "task:      {}", report.task);
    let _ = writeln!(s, "space:     {} (dim {}, {} vertices)", space.name(), space.dim(), space.vertices().len());
    if let Some(c) = composite {
        let _ = writeln!(s, "composite: {} ({} vertices)", c.space().name(), c.joint().vertices().len());
    }
    let _ = writeln!(s, "states:");
    for (i, st) in report.subject.states().iter().enumerate() {
        let _ = writeln!(s, "  [{i}] {}", Show(st));
    }
    for w in &report.warnings {
        let _ = writeln!(s, "warning:   {w}");
    }
    let _ = writeln!(s, "verdict:   {}", if report.verdict { "yes" } else { "no" });
    match &report.witness {
        Some(Witness::Measurement(m)) => {
            let _ = writeln!(s, "measurement:");
            for (j, e) in m.outcomes.iter().enumerate() {
                let _ = writeln!(s, "  e{j} = {}", Show(&e.0));
            }
        }
        Some(Witness::Channel(c)) => {
            let _ = writeln!(s, "channel matrix ({}x{}):", c.matrix().rows(), c.matrix().cols());
            for r in c.matrix().row_vectors() {
                let _ = writeln!(s, "  {}", Show(&r));
            }
        }
        Some(Witness::Cover(c)) => {
            let _ = writeln!(s, "simplex generators:");
            for g in &c.generators {
                let _ = writeln!(s, "  {}", Show(g));
            }
            let _ = writeln!(s, "distinguishing measurement (lifted to the whole space):");
            for (j, e) in c.measurement.outcomes.iter().enumerate() {
                let _ = writeln!(s, "  e{j} = {}", Show(&e.0));
            }
            let _ = writeln!(s, "convex weights:");
            for (i, w) in c.weights.iter().enumerate() {
                let _ = writeln!(s, "  state [{i}] = {}", Show(w));
            }
        }
        None => {}
    }
    if let Some(cert) = &report.certificate {
        let support: Vec<usize> = cert.farkas.support().collect();
        let _ = writeln!(
            s,
            "certificate: Farkas combination of {} of {} constraints ({})",
            support.len(),
            cert.system.constraints().len(),
            if cert.verify() { "verified" } else { "FAILED" }
        );
    }
    if !report.cross_checks.is_empty() {
        let _ = writeln!(s, "cross-checks:");
        for c in &report.cross_checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            if c.detail.is_empty() {
                let _ = writeln!(s, "  [{mark}] {}", c.name);
            } else {
                let _ = writeln!(s, "  [{mark}] {} ({})", c.name, c.detail);
            }
        }
    }
    s
}

#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct DecodeError {
    pub path: String,
    pub message: String,
}

pub fn decode_error(path: &str, message: impl Into<String>) -> DecodeError {
    DecodeError { path: path.to_string(), message: message.into() }
}

pub fn get<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value, DecodeError> {
    v.get(key).ok_or_else(|| decode_error(path, format!("missing field \"{key}\"")))
}

pub fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str, DecodeError> {
    v.as_str().ok_or_else(|| decode_error(path, "expected a string"))
}

pub fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a [Value], DecodeError> {
    v.as_array().map(Vec::as_slice).ok_or_else(|| decode_error(path, "expected an array"))
}

pub fn parse_rational(v: &Value, path: &str) -> Result<Scalar, DecodeError> {
    let s = as_str(v, path)?;
    parse_scalar(s).map_err(|e| decode_error(path, format!("malformed rational \"{s}\": {e}")))
}

pub fn parse_vector(v: &Value, path: &str) -> Result<Vector, DecodeError> {
    as_array(v, path)?.iter().enumerate().map(|(i, x)| parse_rational(x, &format!("{path}[{i}]"))).collect()
}

pub fn parse_vectors(v: &Value, path: &str) -> Result<Vec<Vector>, DecodeError> {
    as_array(v, path)?.iter().enumerate().map(|(i, x)| parse_vector(x, &format!("{path}[{i}]"))).collect()
}

pub fn parse_matrix(v: &Value, cols: usize, path: &str) -> Result<Matrix, DecodeError> {
    let rows = parse_vectors(v, path)?;
    if rows.iter().any(|r| r.len() != cols) {
        return Err(decode_error(path, format!("rows must have {cols} entries")));
    }
    Ok(Matrix::from_rows(cols, &rows))
}

pub fn parse_measurement(v: &Value, path: &str) -> Result<Measurement, DecodeError> {
    Ok(Measurement::new(parse_vectors(v, path)?.into_iter().map(Effect).collect()))
}

/// Dense vector of length `len` from `[[index, "value"], ...]`.
pub fn parse_sparse(v: &Value, len: usize, path: &str) -> Result<Vector, DecodeError> {
    let mut out = vec![Scalar::from_integer(0.into()); len];
    for (k, entry) in as_array(v, path)?.iter().enumerate() {
        let p = format!("{path}[{k}]");
        let pair = as_array(entry, &p)?;
        let [index, value] = pair else {
            return Err(decode_error(&p, "expected [index, value]"));
        };
        let i = index.as_u64().ok_or_else(|| decode_error(&p, "index must be a nonnegative integer"))? as usize;
        if i >= len {
            return Err(decode_error(&p, format!("index {i} out of range")));
        }
        out[i] = parse_rational(value, &p)?;
    }
    Ok(out)
}

pub fn parse_hrep(v: &Value, path: &str) -> Result<HRep, DecodeError> {
    let mut h = HRep::default();
    let row = |r: &Value, p: &str| -> Result<(Vector, Scalar), DecodeError> {
        Ok((parse_vector(get(r, "normal", p)?, &format!("{p}.normal"))?, parse_rational(get(r, "offset", p)?, &format!("{p}.offset"))?))
    };
    for (i, r) in as_array(get(v, "inequalities", path)?, path)?.iter().enumerate() {
        let (n, o) = row(r, &format!("{path}.inequalities[{i}]"))?;
        h.inequalities.push(gptcast::polytope::Halfspace::new(n, o));
    }
    for (i, r) in as_array(get(v, "equalities", path)?, path)?.iter().enumerate() {
        let (n, o) = row(r, &format!("{path}.equalities[{i}]"))?;
        h.equalities.push(gptcast::polytope::Hyperplane::new(n, o));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gptcast::scalar::rat;

    #[test]
    fn rationals_round_trip_as_strings() {
        let v = vec![rat(3, 7), rat(-2, 1), rat(0, 1)];
        let encoded = vector(&v);
        assert_eq!(encoded, json!(["3/7", "-2", "0"]));
        assert_eq!(parse_vector(&encoded, "x").unwrap(), v);
    }

    #[test]
    fn sparse_round_trip() {
        let v = vec![rat(0, 1), rat(1, 2), rat(0, 1), rat(-4, 1)];
        assert_eq!(parse_sparse(&sparse(&v), 4, "m").unwrap(), v);
        assert!(parse_sparse(&json!([[9, "1"]]), 4, "m").is_err());
    }

    #[test]
    fn lp_variables_are_run_length_encoded() {
        let mut sys = LpSystem::new();
        sys.add_vars(3, VarKind::Free);
        sys.add_vars(2, VarKind::NonNegative);
        sys.add_sparse([(0, rat(1, 1)), (4, rat(-1, 2))], Relation::Le, rat(1, 1), "row");
        let v = lp_system(&sys);
        assert_eq!(v["variables"], json!([["free", 3], ["nonnegative", 2]]));
        assert_eq!(v["constraints"][0]["terms"], json!([[0, "1"], [4, "-1/2"]]));
    }
}
