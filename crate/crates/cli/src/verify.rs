//! Re-validates a saved report by substitution.
//!
//! Decision reports: the space, composite and states are rebuilt from the
//! embedded scenario; a "yes" witness is substituted into its defining
//! conditions and a "no" certificate is checked against a freshly built LP
//! for the same task, so a certificate for some other system is rejected.
//! Sweep reports are re-run and compared byte for byte.

use std::sync::Arc;

use gptcast::channel::{compression, symmetrize, AffineChannel};
use gptcast::composite::{custom_tensor, max_tensor, min_tensor, CompositeSpace};
use gptcast::decide::{
    channel_system, check_cover, check_distinguishes, distinguishability_system, CesaroSettings, ChannelGoal,
    SimplexCover, StateSet,
};
use gptcast::lp::FarkasCertificate;
use gptcast::polytope::Polytope;
use gptcast::space::StateSpace;
use serde_json::Value;

use crate::report::{self, as_array, as_str, decode_error, get, DecodeError};
use crate::scenario::SweepConfig;
use crate::sweep::run_sweep;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Verification {
    pub lines: Vec<VerifyLine>,
}

impl Verification {
    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.lines.push(VerifyLine { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        !self.lines.is_empty() && self.lines.iter().all(|l| l.passed)
    }

    pub fn render(&self) -> String {
        self.lines
            .iter()
            .map(|l| {
                let mark = if l.passed { "ok  " } else { "FAIL" };
                if l.detail.is_empty() {
                    format!("[{mark}] {}\n", l.name)
                } else {
                    format!("[{mark}] {} ({})\n", l.name, l.detail)
                }
            })
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("malformed report: {0}")]
    Decode(#[from] DecodeError),
    #[error("report describes an invalid model: {0}")]
    Model(String),
}

fn model_error(e: impl std::fmt::Display) -> VerifyError {
    VerifyError::Model(e.to_string())
}

pub fn verify_report(doc: &Value) -> Result<Verification, VerifyError> {
    let format = as_str(get(doc, "format", "")?, "format")?;
    if format != report::FORMAT {
        return Err(decode_error("format", format!("unsupported format \"{format}\"")).into());
    }
    if doc.get("sweep").is_some() {
        return verify_sweep(doc);
    }
    verify_decision(doc)
}

fn verify_sweep(doc: &Value) -> Result<Verification, VerifyError> {
    let s = get(doc, "sweep", "")?;
    let strings = |key: &str| -> Result<Vec<String>, DecodeError> {
        as_array(get(s, key, "sweep")?, key)?.iter().map(|v| as_str(v, key).map(str::to_string)).collect()
    };
    let numbers = |key: &str| -> Result<Vec<u64>, DecodeError> {
        as_array(get(s, key, "sweep")?, key)?.iter().map(|v| v.as_u64().ok_or_else(|| decode_error(key, "expected an integer"))).collect()
    };
    let int = |key: &str| -> Result<u64, DecodeError> {
        get(s, key, "sweep")?.as_u64().ok_or_else(|| decode_error(key, "expected an integer"))
    };
    let config = SweepConfig {
        spaces: strings("spaces")?,
        sizes: numbers("sizes")?.into_iter().map(|x| x as usize).collect(),
        trials: int("trials")? as usize,
        seed: int("seed")?,
    };
    let start = int("start")? as usize;
    let agreement =
        get(s, "cesaro_agreement", "sweep")?.as_f64().ok_or_else(|| decode_error("cesaro_agreement", "expected a number"))?;
    let cesaro = CesaroSettings { agreement, ..CesaroSettings::default() };
    let rerun = run_sweep(&config, start, &cesaro).map_err(model_error)?;
    let mut v = Verification::default();
    v.push("sweep re-runs to an identical report", rerun.to_json(&cesaro) == *doc, "");
    v.push("every trial passed its cross-checks", rerun.all_passed(), format!("{} trials", rerun.records.len()));
    Ok(v)
}

fn rebuild_space(v: &Value) -> Result<Arc<StateSpace>, VerifyError> {
    let name = as_str(get(v, "name", "scenario.space")?, "scenario.space.name")?;
    let unit = report::parse_vector(get(v, "unit", "scenario.space")?, "scenario.space.unit")?;
    let vertices = report::parse_vectors(get(v, "vertices", "scenario.space")?, "scenario.space.vertices")?;
    Ok(Arc::new(StateSpace::from_vertices(name, unit, vertices).map_err(model_error)?))
}

fn rebuild_composite(v: &Value, space: &Arc<StateSpace>) -> Result<CompositeSpace, VerifyError> {
    let variant = as_str(get(v, "variant", "scenario.composite")?, "scenario.composite.variant")?;
    match variant {
        "min" => Ok(min_tensor(space, space)),
        "max" => Ok(max_tensor(space, space)),
        "custom" => {
            let h = report::parse_hrep(get(v, "hrep", "scenario.composite")?, "scenario.composite.hrep")?;
            custom_tensor(space, space, &h).map_err(model_error)
        }
        other => Err(decode_error("scenario.composite.variant", format!("unknown variant \"{other}\"")).into()),
    }
}

fn channel(m: &Value, path: &str, space: &Arc<StateSpace>, composite: &CompositeSpace) -> Result<AffineChannel, VerifyError> {
    let matrix = report::parse_matrix(m, space.dim(), path)?;
    AffineChannel::new(matrix, space.clone(), composite.space().clone()).map_err(model_error)
}

fn verify_decision(doc: &Value) -> Result<Verification, VerifyError> {
    let scenario = get(doc, "scenario", "")?;
    let result = get(doc, "result", "")?;
    let space = rebuild_space(get(scenario, "space", "scenario")?)?;
    let states = report::parse_vectors(get(result, "states", "result")?, "result.states")?;
    let ss = StateSet::new(space.clone(), states).map_err(model_error)?;
    let task = as_str(get(result, "task", "result")?, "result.task")?;
    let verdict = as_str(get(result, "verdict", "result")?, "result.verdict")? == "yes";
    let composite = match task {
        "distinguish" => None,
        _ => Some(rebuild_composite(get(scenario, "composite", "scenario")?, &space)?),
    };
    let mut v = Verification::default();
    v.push("states lie in the state space", true, format!("{} states", ss.len()));

    let witness = get(result, "witness", "result")?;
    let certificate = get(result, "certificate", "result")?;
    if verdict {
        v.push("yes carries no certificate", certificate.is_null(), "");
        let kind = as_str(get(witness, "kind", "result.witness")?, "result.witness.kind")?;
        match (task, kind) {
            ("distinguish", "measurement") => {
                let m = report::parse_measurement(get(witness, "effects", "result.witness")?, "result.witness.effects")?;
                let ok = check_distinguishes(&ss, &m);
                v.push("measurement distinguishes the states", ok.is_ok(), ok.err().map(|e| e.to_string()).unwrap_or_default());
            }
            ("clone" | "broadcast", "channel") => {
                let comp = composite.as_ref().expect("built for channel tasks");
                let t = channel(get(witness, "matrix", "result.witness")?, "result.witness.matrix", &space, comp)?;
                let valid = t.validate();
                v.push("channel maps the space into the composite", valid.is_ok(), valid.err().map(|e| format!("{} violations", e.len())).unwrap_or_default());
                let name = if task == "clone" { "channel clones every state" } else { "channel broadcasts every state" };
                let hit = ss.states().iter().all(|s| if task == "clone" { t.clones(s) } else { t.broadcasts(s) });
                v.push(name, hit, "");
            }
            ("analyze", "cover") => verify_cover(&mut v, witness, &ss, &space, composite.as_ref().expect("built"))?,
            ("analyze", "channel") => {
                let comp = composite.as_ref().expect("built");
                let t = channel(get(witness, "matrix", "result.witness")?, "result.witness.matrix", &space, comp)?;
                v.push("channel maps the space into the composite", t.is_valid(), "");
                v.push("channel broadcasts every state", ss.states().iter().all(|s| t.broadcasts(s)), "");
            }
            _ => return Err(decode_error("result.witness.kind", format!("witness \"{kind}\" does not fit task \"{task}\"")).into()),
        }
    } else {
        v.push("no carries no witness", witness.is_null(), "");
        let expected = match task {
            "distinguish" => distinguishability_system(&ss),
            "clone" => channel_system(&ss, composite.as_ref().expect("built"), ChannelGoal::Clone),
            "broadcast" | "analyze" => channel_system(&ss, composite.as_ref().expect("built"), ChannelGoal::Broadcast),
            other => return Err(decode_error("result.task", format!("unknown task \"{other}\"")).into()),
        };
        let system = get(certificate, "system", "result.certificate")?;
        v.push("certificate LP is the LP of this task", report::lp_system(&expected) == *system, "");
        let multipliers = report::parse_sparse(
            get(certificate, "multipliers", "result.certificate")?,
            expected.constraints().len(),
            "result.certificate.multipliers",
        )?;
        let farkas = FarkasCertificate { multipliers };
        v.push("Farkas combination proves infeasibility", farkas.verify(&expected), format!("{} rows used", farkas.support().count()));
    }
    Ok(v)
}

fn verify_cover(
    v: &mut Verification,
    w: &Value,
    ss: &StateSet,
    space: &Arc<StateSpace>,
    composite: &CompositeSpace,
) -> Result<(), VerifyError> {
    let p = "result.witness";
    let b = channel(get(w, "broadcaster", p)?, "result.witness.broadcaster", space, composite)?;
    v.push("broadcaster maps the space into the composite", b.is_valid(), "");
    v.push("broadcaster broadcasts every state", ss.states().iter().all(|s| b.broadcasts(s)), "");
    let sym = symmetrize(&b).map_err(model_error)?;
    let reported_sym = report::parse_matrix(get(w, "symmetrized", p)?, space.dim(), "result.witness.symmetrized")?;
    v.push("symmetrized channel recomputes", *sym.matrix() == reported_sym, "");
    let marginal = gptcast::channel::marginal_channel_a(&sym).map_err(model_error)?;
    let comp = compression(&marginal).map_err(model_error)?;
    let reported_p = report::parse_matrix(get(w, "compression", p)?, space.dim(), "result.witness.compression")?;
    v.push("compression recomputes", *comp.matrix() == reported_p, "");
    let generators = report::parse_vectors(get(w, "generators", p)?, "result.witness.generators")?;
    let measurement = report::parse_measurement(get(w, "measurement", p)?, "result.witness.measurement")?;
    let weights = report::parse_vectors(get(w, "weights", p)?, "result.witness.weights")?;
    let gamma = Polytope::from_points(space.dim(), generators.clone()).map_err(model_error)?;
    let cover = SimplexCover {
        broadcaster: b,
        symmetrized: sym,
        compression: comp,
        gamma_is_simplex: gamma.is_simplex(),
        broadcast_set: gamma,
        generators,
        measurement,
        weights,
        q_broadcasts_generators: w.get("q_broadcasts_generators").and_then(Value::as_bool).unwrap_or(false),
    };
    let ok = check_cover(ss, &cover);
    v.push(
        "generators are distinguished and contain every state",
        ok.is_ok(),
        ok.err().map(|e| e.to_string()).unwrap_or_default(),
    );
    v.push("generators span a simplex", cover.gamma_is_simplex, format!("{} generators", cover.generators.len()));
    Ok(())
}
