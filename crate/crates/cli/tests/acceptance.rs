//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p gptcast-cli --test acceptance`.

use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use gptcast::channel::{
    cesaro_average, compression, fixed_set, is_idempotent, max_abs_difference, range_polytope, CESARO_MAX_ITERATIONS,
    CESARO_TOLERANCE,
};
use gptcast::composite::{max_tensor, min_tensor};
use gptcast::decide::{broadcaster_exists, StateSet, Witness};
use gptcast::polytope::Membership;
use gptcast::random::{random_convex_combination, random_endochannel};
use gptcast::scalar::{dot, kron};
use gptcast::space::{make_classical, make_polygon, make_square_gbit, StateSpace};
use gptcast::CesaroSettings;
use gptcast_cli::demos::DEMOS;
use gptcast_cli::report;
use gptcast_cli::sweep::{run_sweep, SweepOutcome};
use gptcast_cli::{run_scenario, RunOptions, SweepConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Builtin spaces with cheap maximal tensor products.
fn builtins() -> Vec<Arc<StateSpace>> {
    vec![
        Arc::new(make_classical(2).unwrap()),
        Arc::new(make_classical(3).unwrap()),
        Arc::new(make_classical(4).unwrap()),
        Arc::new(make_square_gbit()),
        Arc::new(make_polygon(5).unwrap()),
    ]
}

fn classical_universal_broadcasting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 2..=4 {
        let s = Arc::new(make_classical(n).unwrap());
        for composite in [min_tensor(&s, &s), max_tensor(&s, &s)] {
            let report = broadcaster_exists(&StateSet::all_vertices(&s), &composite).map_err(|e| e.to_string())?;
            ensure(report.verdict && report.reverify(), || format!("classical({n}): no verified broadcaster"))?;
            let Some(Witness::Channel(b)) = &report.witness else {
                return Err(format!("classical({n}): yes without a channel"));
            };
            ensure(s.vertices().iter().all(|v| b.broadcasts(v)), || format!("classical({n}): a vertex is not broadcast"))?;
            for k in 0..10 {
                let p = random_convex_combination(&mut rng, s.vertices(), 7);
                ensure(b.broadcasts(&p), || format!("classical({n}): interior state {k} is not broadcast"))?;
            }
        }
    }
    Ok("classical(2..4), min and max: vertices and 10 interior states each broadcast exactly".into())
}

fn no_universal_broadcasting() -> Outcome {
    for s in [Arc::new(make_square_gbit()), Arc::new(make_polygon(5).unwrap())] {
        for composite in [min_tensor(&s, &s), max_tensor(&s, &s)] {
            let report = broadcaster_exists(&StateSet::all_vertices(&s), &composite).map_err(|e| e.to_string())?;
            let certified = report.certificate.as_ref().is_some_and(|c| c.verify());
            ensure(!report.verdict && certified && report.reverify(), || format!("{}: expected a verified no", s.name()))?;
        }
    }
    Ok("square and pentagon vertex sets: no, Farkas certificates verify (min and max)".into())
}

fn clone_iff_distinguishable(sweep: &SweepOutcome) -> Outcome {
    let t = sweep.total();
    ensure(t.trials >= 100, || format!("only {} trials", t.trials))?;
    ensure(t.clone_matches == t.trials, || format!("clone = distinguish in {}/{} trials", t.clone_matches, t.trials))?;
    let reverified = sweep.records.iter().filter(|r| r.reverified).count();
    ensure(reverified == t.trials, || format!("{} trials with an unverifiable answer", t.trials - reverified))?;
    Ok(format!("clone verdict = distinguishability verdict in {}/{} trials, min and max", t.clone_matches, t.trials))
}

fn broadcast_iff_covered(sweep: &SweepOutcome) -> Outcome {
    let t = sweep.total();
    ensure(t.covers > 0 && t.covers_ok == t.covers, || format!("covers {}/{}", t.covers_ok, t.covers))?;
    ensure(t.constructed > 0 && t.constructed_ok == t.constructed, || {
        format!("constructed broadcasters {}/{}", t.constructed_ok, t.constructed)
    })?;
    let yes = sweep.records.iter().filter(|r| r.broadcast.iter().any(|&b| b)).count();
    ensure(t.covers == yes, || format!("{} yes-instances but {} covers checked", yes, t.covers))?;
    Ok(format!(
        "{}/{} covers with distinguishable generators containing the inputs; {}/{} constructed broadcasters pass 10 simplex probes",
        t.covers_ok, t.covers, t.constructed_ok, t.constructed
    ))
}

fn compression_onto_fixed_points() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut steps = 0usize;
    for s in [Arc::new(make_square_gbit()), Arc::new(make_classical(4).unwrap())] {
        for k in 0..50 {
            let t = random_endochannel(&mut rng, &s);
            ensure(t.is_valid(), || format!("{} channel {k} is invalid", s.name()))?;
            let p = compression(&t).map_err(|e| e.to_string())?;
            ensure(is_idempotent(&p), || format!("{} channel {k}: P∘P ≠ P", s.name()))?;
            let same_range = range_polytope(&p).map_err(|e| e.to_string())? == fixed_set(&t).map_err(|e| e.to_string())?;
            ensure(same_range, || format!("{} channel {k}: range(P) ≠ Fix(T)", s.name()))?;
            let avg = cesaro_average(&t, CESARO_TOLERANCE, CESARO_MAX_ITERATIONS);
            let gap = max_abs_difference(p.matrix(), &avg.matrix);
            ensure(avg.converged && gap < 1e-9, || format!("{} channel {k}: Cesàro gap {gap:e}", s.name()))?;
            worst = worst.max(gap);
            steps = steps.max(avg.iterations);
        }
    }
    Ok(format!("100 channels: P idempotent, range(P) = Fix(T); Cesàro gap ≤ {worst:.1e} within {steps} doubling steps"))
}

fn tensor_structure() -> Outcome {
    let s = Arc::new(make_square_gbit());
    let (min, max) = (min_tensor(&s, &s), max_tensor(&s, &s));
    let vertices = max.joint().vertices();
    ensure(vertices.len() == 24, || format!("square ⊗max square has {} vertices", vertices.len()))?;
    let products = vertices.iter().filter(|v| min.joint().vertices().contains(v)).count();
    ensure(products == 16, || format!("{products} product vertices"))?;
    for v in vertices.iter().filter(|v| !min.joint().vertices().contains(v)) {
        let Membership::Outside { separator } = min.joint().member(v).map_err(|e| e.to_string())? else {
            return Err("an entangled vertex lies in the minimal tensor product".into());
        };
        let at_v = dot(&separator, v);
        ensure(min.joint().vertices().iter().all(|w| dot(&separator, w) < at_v), || "separator fails".into())?;
    }
    let mut pairs = 0;
    for a in builtins().iter().filter(|a| a.is_classical()) {
        for b in builtins() {
            ensure(min_tensor(a, &b).joint() == max_tensor(a, &b).joint(), || format!("{} ⊗ {}: min ≠ max", a.name(), b.name()))?;
            ensure(min_tensor(&b, a).joint() == max_tensor(&b, a).joint(), || format!("{} ⊗ {}: min ≠ max", b.name(), a.name()))?;
            pairs += 2;
        }
    }
    Ok(format!("square ⊗max square: 24 = 16 product + 8 separated entangled; min = max on {pairs} classical pairs"))
}

fn pure_marginals() -> Outcome {
    let spaces = builtins();
    let mut checked = 0;
    for (i, a) in spaces.iter().enumerate() {
        for b in &spaces[i..] {
            let max = max_tensor(a, b);
            for v in max.joint().vertices() {
                let ma = max.marginal_a(v).map_err(|e| e.to_string())?;
                let mb = max.marginal_b(v).map_err(|e| e.to_string())?;
                if a.is_pure(&ma) || b.is_pure(&mb) {
                    ensure(*v == kron(&ma, &mb), || format!("{} ⊗ {}: pure marginal without factorization", a.name(), b.name()))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} vertices with a pure marginal factorize exactly"))
}

fn invariance(sweep: &SweepOutcome) -> Outcome {
    let t = sweep.total();
    ensure(t.invariance == t.trials, || format!("min = max broadcast verdicts in {}/{} trials", t.invariance, t.trials))?;
    Ok(format!("broadcast verdicts agree under min and max in {}/{} trials", t.invariance, t.trials))
}

fn determinism() -> Outcome {
    let opts = RunOptions::default();
    for demo in DEMOS {
        let scenario = demo.scenario().map_err(|e| e.to_string())?;
        let bytes = || -> Result<Vec<u8>, String> {
            Ok(report::to_bytes(&run_scenario(&scenario, &opts).map_err(|e| e.to_string())?.report))
        };
        ensure(bytes()? == bytes()?, || format!("demo {} differs between runs", demo.name))?;
    }
    let config = SweepConfig { trials: 12, seed: 99, ..SweepConfig::default() };
    let cesaro = CesaroSettings::default();
    let json = || report::to_bytes(&run_sweep(&config, 0, &cesaro).expect("sweep runs").to_json(&cesaro));
    ensure(json() == json(), || "library sweep differs between runs".into())?;

    // The binary end to end, with timings omitted from the report.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |args: &[&str], name: &str| -> Result<Vec<u8>, String> {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_gptcast"))
            .args(args)
            .arg("--report")
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || format!("gptcast {args:?} failed"))?;
        std::fs::read(&path).map_err(|e| e.to_string())
    };
    let sweep_args = ["sweep", "--trials", "9", "--seed", "4"];
    ensure(run(&sweep_args, "a.json")? == run(&sweep_args, "b.json")?, || "CLI sweep reports differ".into())?;
    let demo_args = ["demo", "gbit-covered-segment"];
    ensure(run(&demo_args, "c.json")? == run(&demo_args, "d.json")?, || "CLI demo reports differ".into())?;
    Ok(format!("{} demos and seeded sweeps reproduce byte-identical reports (library and CLI)", DEMOS.len()))
}

fn main() -> ExitCode {
    let sweep_start = Instant::now();
    let sweep = run_sweep(&SweepConfig::default(), 0, &CesaroSettings::default()).expect("default sweep runs");
    let sweep_time = sweep_start.elapsed();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("classical universal broadcasting", Box::new(classical_universal_broadcasting)),
        ("no universal broadcasting without classicality", Box::new(no_universal_broadcasting)),
        ("cloneable iff jointly distinguishable", Box::new(|| clone_iff_distinguishable(&sweep))),
        ("broadcastable iff covered by a distinguishable simplex", Box::new(|| broadcast_iff_covered(&sweep))),
        ("compression onto fixed points", Box::new(compression_onto_fixed_points)),
        ("tensor product sandwich and structure", Box::new(tensor_structure)),
        ("pure marginals factorize", Box::new(pure_marginals)),
        ("broadcastability is tensor-invariant", Box::new(|| invariance(&sweep))),
        ("determinism", Box::new(determinism)),
    ];
    println!("acceptance: default sweep of {} trials ran in {:.1?}", sweep.records.len(), sweep_time);
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let mark = if outcome.is_ok() { "PASS" } else { "FAIL" };
        let detail = outcome.unwrap_or_else(|e| e);
        println!("{mark} criterion {}: {name}: {detail} [{:.1?}]", i + 1, start.elapsed());
        failed += usize::from(mark == "FAIL");
    }
    if !sweep.all_passed() {
        println!("sweep disagreements:\n{}", sweep.table());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
