//! Randomized cross-validation sweeps.
//!
//! Trial `i` draws its states from a ChaCha8 stream selected by `(seed, i)`,
//! so any trial can be replayed alone and trials run in parallel without
//! affecting each other. Results are collected in trial order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use gptcast::composite::{max_tensor, min_tensor, CompositeSpace};
use gptcast::decide::{
    broadcaster_exists, cesaro_check, cloner_exists, construct_broadcaster, extract_simplex_cover,
    jointly_distinguishable, CesaroSettings, StateSet, Witness,
};
use gptcast::channel::marginal_channel_a;
use gptcast::linalg::rank;
use gptcast::random::{random_convex_combination, random_state_set};
use gptcast::scalar::Vector;
use gptcast::space::{Measurement, StateSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::report;
use crate::scenario::{parse_space_name, ScenarioError, SweepConfig};

/// Random points of a generated simplex checked against a constructed
/// broadcaster.
const SIMPLEX_PROBES: usize = 10;

struct SpaceCase {
    label: String,
    space: Arc<StateSpace>,
    min: CompositeSpace,
    max: CompositeSpace,
}

/// Outcome of one trial. `None` marks checks that do not apply.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub space: String,
    pub size: usize,
    pub states: Vec<Vector>,
    pub distinguishable: bool,
    /// Cloner LP verdicts under min and max.
    pub clone: [bool; 2],
    /// Broadcaster LP verdicts under min and max.
    pub broadcast: [bool; 2],
    /// Every witness and certificate re-verified by substitution.
    pub reverified: bool,
    /// Cover extracted from both broadcasters with distinguishable generators
    /// containing the states.
    pub cover: Option<bool>,
    pub gamma_simplex: Option<bool>,
    pub cesaro: Option<bool>,
    /// Constructed broadcaster of distinguishable generators broadcasts random
    /// points of their simplex.
    pub constructed: Option<bool>,
    pub failures: Vec<String>,
}

impl TrialRecord {
    pub fn clone_matches(&self) -> bool {
        self.clone.iter().all(|&c| c == self.distinguishable)
    }

    pub fn invariance(&self) -> bool {
        self.broadcast[0] == self.broadcast[1]
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn to_json(&self) -> Value {
        json!({
            "index": self.index,
            "space": self.space,
            "size": self.size,
            "states": report::vectors(&self.states),
            "distinguishable": self.distinguishable,
            "clone": { "min": self.clone[0], "max": self.clone[1] },
            "broadcast": { "min": self.broadcast[0], "max": self.broadcast[1] },
            "reverified": self.reverified,
            "cover": self.cover,
            "gamma_simplex": self.gamma_simplex,
            "cesaro": self.cesaro,
            "constructed": self.constructed,
            "failures": self.failures,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub config: SweepConfig,
    pub start: usize,
    pub records: Vec<TrialRecord>,
}

fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn check_constructed(
    gens: &StateSet,
    m: &Measurement,
    min: &CompositeSpace,
    rng: &mut ChaCha8Rng,
) -> Result<(), String> {
    let b = construct_broadcaster(gens, m, min).map_err(|e| e.to_string())?;
    for k in 0..SIMPLEX_PROBES {
        let p = random_convex_combination(rng, gens.states(), 5);
        if !b.broadcasts(&p) {
            return Err(format!("constructed broadcaster misses simplex probe {k}"));
        }
    }
    Ok(())
}

fn run_trial(case: &SpaceCase, size: usize, index: usize, seed: u64, cesaro: &CesaroSettings) -> TrialRecord {
    let mut rng = trial_rng(seed, index);
    let raw = random_state_set(&mut rng, &case.space, size);
    let ss = StateSet::new(case.space.clone(), raw).expect("random states lie in the space");
    let mut failures = Vec::new();
    let mut reverified = true;

    let dist = jointly_distinguishable(&ss);
    reverified &= dist.reverify();
    let mut clone = [false; 2];
    let mut broadcast = [false; 2];
    let mut witnesses = Vec::new();
    for (k, comp) in [&case.min, &case.max].into_iter().enumerate() {
        let c = cloner_exists(&ss, comp).expect("composite matches");
        let b = broadcaster_exists(&ss, comp).expect("composite matches");
        reverified &= c.reverify() && b.reverify();
        clone[k] = c.verdict;
        broadcast[k] = b.verdict;
        if let Some(Witness::Channel(w)) = b.witness {
            witnesses.push(w);
        }
    }
    if !reverified {
        failures.push("a witness or certificate failed re-verification".into());
    }
    if clone.iter().any(|&c| c != dist.verdict) {
        failures.push(format!("clone verdicts {clone:?} differ from distinguishability {}", dist.verdict));
    }
    if broadcast[0] != broadcast[1] {
        failures.push(format!("broadcast verdict differs between min ({}) and max ({})", broadcast[0], broadcast[1]));
    }

    let (mut cover_ok, mut gamma_simplex, mut cesaro_ok, mut constructed) = (None, None, None, None);
    for (k, w) in witnesses.iter().enumerate() {
        let result = extract_simplex_cover(w, &ss).map_err(|e| e.to_string()).and_then(|cover| {
            let gens = StateSet::new(case.space.clone(), cover.generators.clone()).map_err(|e| e.to_string())?;
            if !jointly_distinguishable(&gens).verdict {
                return Err("generators are not jointly distinguishable".into());
            }
            gamma_simplex = Some(gamma_simplex.unwrap_or(true) && cover.gamma_is_simplex && cover.q_broadcasts_generators);
            let marginal = marginal_channel_a(&cover.symmetrized).map_err(|e| e.to_string())?;
            let cc = cesaro_check(&marginal, cesaro).map_err(|e| e.to_string())?;
            cesaro_ok = Some(cesaro_ok.unwrap_or(true) && cc.passed);
            let built = check_constructed(&gens, &cover.measurement, &case.min, &mut rng);
            constructed = Some(constructed.unwrap_or(true) && built.is_ok());
            built
        });
        cover_ok = Some(cover_ok.unwrap_or(true) && result.is_ok());
        if let Err(e) = result {
            failures.push(format!("cover from the {} broadcaster: {e}", ["min", "max"][k]));
        }
    }
    // Distinguishable, affinely independent inputs are their own generators.
    if let Some(Witness::Measurement(m)) = &dist.witness {
        if !ss.is_empty() && rank(case.space.dim(), ss.states()) == ss.len() {
            let built = check_constructed(&ss, m, &case.min, &mut rng);
            constructed = Some(constructed.unwrap_or(true) && built.is_ok());
            if let Err(e) = built {
                failures.push(e);
            }
        }
    }
    if gamma_simplex == Some(false) {
        failures.push("broadcast set is not a simplex broadcast by Q".into());
    }
    if cesaro_ok == Some(false) {
        failures.push("Cesàro average disagrees with the exact compression".into());
    }

    TrialRecord {
        index,
        space: case.label.clone(),
        size,
        states: ss.states().to_vec(),
        distinguishable: dist.verdict,
        clone,
        broadcast,
        reverified,
        cover: cover_ok,
        gamma_simplex,
        cesaro: cesaro_ok,
        constructed,
        failures,
    }
}

/// Runs trials `start .. start + config.trials`. Trial `i` uses space
/// `spaces[i % spaces.len()]` and size `sizes[(i / spaces.len()) % sizes.len()]`.
pub fn run_sweep(config: &SweepConfig, start: usize, cesaro: &CesaroSettings) -> Result<SweepOutcome, ScenarioError> {
    if config.trials > 0 && (config.spaces.is_empty() || config.sizes.is_empty()) {
        return Err(ScenarioError::Field { field: "sweep".into(), message: "at least one space and one size are required".into() });
    }
    let cases: Vec<SpaceCase> = config
        .spaces
        .iter()
        .map(|label| {
            let space = Arc::new(parse_space_name(label)?);
            Ok((label.clone(), space))
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?
        .into_par_iter()
        .map(|(label, space)| {
            let (min, max) = rayon::join(|| min_tensor(&space, &space), || max_tensor(&space, &space));
            SpaceCase { label, space, min, max }
        })
        .collect();
    let records: Vec<TrialRecord> = (start..start + config.trials)
        .into_par_iter()
        .map(|i| {
            let case = &cases[i % cases.len()];
            let size = config.sizes[(i / cases.len()) % config.sizes.len()];
            run_trial(case, size, i, config.seed, cesaro)
        })
        .collect();
    Ok(SweepOutcome { config: config.clone(), start, records })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tally {
    pub trials: usize,
    pub distinguishable: usize,
    pub broadcastable: usize,
    pub clone_matches: usize,
    pub invariance: usize,
    pub covers: usize,
    pub covers_ok: usize,
    pub constructed: usize,
    pub constructed_ok: usize,
    pub cesaro_ok: usize,
    pub reverified: usize,
    pub passed: usize,
}

impl Tally {
    fn add(&mut self, r: &TrialRecord) {
        self.trials += 1;
        self.distinguishable += r.distinguishable as usize;
        self.broadcastable += r.broadcast[1] as usize;
        self.clone_matches += r.clone_matches() as usize;
        self.invariance += r.invariance() as usize;
        self.covers += r.cover.is_some() as usize;
        self.covers_ok += (r.cover == Some(true)) as usize;
        self.constructed += r.constructed.is_some() as usize;
        self.constructed_ok += (r.constructed == Some(true)) as usize;
        self.cesaro_ok += (r.cesaro == Some(true)) as usize;
        self.reverified += r.reverified as usize;
        self.passed += r.passed() as usize;
    }

    fn to_json(&self) -> Value {
        json!({
            "trials": self.trials,
            "distinguishable": self.distinguishable,
            "broadcastable": self.broadcastable,
            "clone_matches_distinguish": self.clone_matches,
            "min_max_agree": self.invariance,
            "covers": self.covers,
            "covers_ok": self.covers_ok,
            "constructed": self.constructed,
            "constructed_ok": self.constructed_ok,
            "cesaro_ok": self.cesaro_ok,
            "reverified": self.reverified,
            "passed": self.passed,
        })
    }
}

impl SweepOutcome {
    pub fn total(&self) -> Tally {
        let mut t = Tally::default();
        self.records.iter().for_each(|r| t.add(r));
        t
    }

    pub fn by_space(&self) -> BTreeMap<String, Tally> {
        let mut m: BTreeMap<String, Tally> = BTreeMap::new();
        for r in &self.records {
            m.entry(r.space.clone()).or_default().add(r);
        }
        m
    }

    pub fn failures(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(|r| !r.passed())
    }

    pub fn all_passed(&self) -> bool {
        self.records.iter().all(TrialRecord::passed)
    }

    pub fn to_json(&self, cesaro: &CesaroSettings) -> Value {
        json!({
            "format": report::FORMAT,
            "sweep": {
                "spaces": self.config.spaces,
                "sizes": self.config.sizes,
                "trials": self.config.trials,
                "seed": self.config.seed,
                "start": self.start,
                "cesaro_agreement": cesaro.agreement,
            },
            "summary": self.total().to_json(),
            "by_space": self.by_space().iter().map(|(k, v)| (k.clone(), v.to_json())).collect::<serde_json::Map<_, _>>(),
            "disagreements": self.failures().map(TrialRecord::to_json).collect::<Vec<_>>(),
            "trials": self.records.iter().map(TrialRecord::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(
            s,
            "sweep: {} trials from index {} (seed {}) over {}; sizes {}",
            c.trials,
            self.start,
            c.seed,
            c.spaces.join(", "),
            c.sizes.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        );
        let _ = writeln!(
            s,
            "{:<14} {:>6} {:>6} {:>6} {:>10} {:>10} {:>9} {:>11} {:>8}",
            "space", "trials", "dist", "bcast", "clone=dist", "min=max", "covers", "constructed", "passed"
        );
        let mut rows: Vec<(String, Tally)> = self.by_space().into_iter().collect();
        rows.push(("total".into(), self.total()));
        for (name, t) in rows {
            let _ = writeln!(
                s,
                "{:<14} {:>6} {:>6} {:>6} {:>10} {:>10} {:>9} {:>11} {:>8}",
                name,
                t.trials,
                t.distinguishable,
                t.broadcastable,
                format!("{}/{}", t.clone_matches, t.trials),
                format!("{}/{}", t.invariance, t.trials),
                format!("{}/{}", t.covers_ok, t.covers),
                format!("{}/{}", t.constructed_ok, t.constructed),
                format!("{}/{}", t.passed, t.trials),
            );
        }
        // Trial i depends on the full space and size lists, so the replay
        // command repeats them.
        let lists: String = c
            .spaces
            .iter()
            .map(|sp| format!(" --space {sp}"))
            .chain(c.sizes.iter().map(|n| format!(" --size {n}")))
            .collect();
        for r in self.failures() {
            let _ = writeln!(s, "DISAGREEMENT in trial {} ({}): {}", r.index, r.space, r.failures.join("; "));
            let _ = writeln!(s, "  replay: gptcast sweep --seed {} --start {} --trials 1{lists}", c.seed, r.index);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(trials: usize) -> SweepConfig {
        SweepConfig { spaces: vec!["square".into(), "bit".into()], sizes: vec![1, 2], trials, seed: 17 }
    }

    #[test]
    fn zero_trials_is_an_empty_summary() {
        let out = run_sweep(&config(0), 0, &CesaroSettings::default()).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.total(), Tally::default());
    }

    #[test]
    fn trials_replay_individually() {
        let cesaro = CesaroSettings::default();
        let full = run_sweep(&config(6), 0, &cesaro).unwrap();
        assert!(full.all_passed(), "{}", full.table());
        let single_cfg = config(1);
        let single = run_sweep(&single_cfg, 4, &cesaro).unwrap();
        assert_eq!(single.records[0], full.records[4]);
    }
}
