//! Executes scenarios and assembles their reports.

use gptcast::composite::{max_tensor, min_tensor, CompositeSpace};
use gptcast::decide::{
    analyze_with, broadcaster_exists, cloner_exists, jointly_distinguishable, CesaroSettings, DecisionReport, StateSet,
};
use serde_json::Value;

use crate::report::{self, ReportOptions};
use crate::scenario::{CompositeChoice, Scenario, ScenarioTask};
use crate::sweep::run_sweep;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces the scenario's composite.
    pub composite: Option<CompositeChoice>,
    pub cesaro: CesaroSettings,
    pub report: ReportOptions,
    /// Overrides for sweep scenarios.
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: String,
    pub report: Value,
    /// Every cross-check passed.
    pub consistent: bool,
}

fn decide(scenario: &Scenario, ss: &StateSet, composite: Option<&CompositeSpace>, cesaro: &CesaroSettings) -> anyhow::Result<DecisionReport> {
    Ok(match scenario.task {
        ScenarioTask::Distinguish => jointly_distinguishable(ss),
        ScenarioTask::Clone => cloner_exists(ss, composite.expect("built for this task"))?,
        ScenarioTask::Broadcast => broadcaster_exists(ss, composite.expect("built for this task"))?,
        ScenarioTask::Analyze => {
            let composite = composite.expect("built for this task");
            let space = ss.space();
            let other = match composite.variant() {
                gptcast::TensorVariant::Max => min_tensor(space, space),
                _ => max_tensor(space, space),
            };
            analyze_with(ss, composite, &other, cesaro)?
        }
        ScenarioTask::Sweep => unreachable!("sweeps are dispatched separately"),
    })
}

pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> anyhow::Result<RunOutput> {
    let mut scenario = scenario.clone();
    if let Some(c) = &opts.composite {
        scenario.composite = c.clone();
    }
    if scenario.task == ScenarioTask::Sweep {
        let mut cfg = scenario.sweep.clone().unwrap_or_default();
        cfg.seed = opts.seed.unwrap_or(cfg.seed);
        cfg.trials = opts.trials.unwrap_or(cfg.trials);
        let outcome = run_sweep(&cfg, 0, &opts.cesaro)?;
        return Ok(RunOutput { summary: outcome.table(), report: outcome.to_json(&opts.cesaro), consistent: outcome.all_passed() });
    }
    let space = scenario.space.clone().expect("non-sweep scenarios have a space");
    let ss = StateSet::new(space.clone(), scenario.states.clone())?;
    let composite = match scenario.task {
        ScenarioTask::Distinguish => None,
        _ => Some(scenario.composite.build(&space)?),
    };
    let decision = decide(&scenario, &ss, composite.as_ref(), &opts.cesaro)?;
    let mut summary = String::new();
    summary.push_str(&format!("scenario:  {}\n", scenario.name));
    if let Some(d) = &scenario.description {
        summary.push_str(&format!("           {d}\n"));
    }
    summary.push_str(&report::summary(&decision, composite.as_ref()));
    let doc = report::document(report::scenario(&scenario), report::decision(&decision, opts.report));
    Ok(RunOutput { summary, report: doc, consistent: decision.all_checks_passed() })
}
