//! Trial suites, Student-t summaries, replay traces and reports.

mod replay;
mod report;

pub use replay::{
    export_replay, read_trace, verify_trace, ReplayError, StepRecord, Trace, TraceHeader,
    REPLAY_FORMAT, REPLAY_VERSION,
};
pub use report::{format_ci, render_table, Report, ReportColumn, REPORT_FORMAT, REPORT_VERSION};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::Executor;
use crate::config::SimConfig;
use crate::env::{env_step, reset, Action, EnvError, EpisodeOutcome, ObsLayout};
use crate::policy::{Controller, PolicyError};
use crate::scenario::ScenarioSpec;
use crate::stats::{student_t_ci, ConfidenceInterval, StatsError};

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("number of trials must be at least 1")]
    NoTrials,
    #[error("no scenarios given")]
    NoScenarios,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub scenario: String,
    pub seed: u64,
    pub outcome: EpisodeOutcome,
    pub step_count: u32,
    /// Kicks that actually launched the ball.
    pub kick_count: u32,
    /// Agent-steps whose kick channel was triggered, whether or not a kick fired.
    pub kick_triggers: u32,
    pub trace_path: Option<PathBuf>,
}

/// Rolls out one episode with deterministic controller inference.
pub fn run_trial(
    controller: &dyn Controller,
    scenario: &ScenarioSpec,
    config: &SimConfig,
    seed: u64,
    record: bool,
) -> Result<(TrialResult, Option<Trace>), EvalError> {
    let layout = ObsLayout::for_config(config);
    controller.check_layout(&layout.version())?;
    let (mut state, mut obs) = reset(scenario, config, seed)?;
    let mut trace = record.then(|| Trace {
        header: TraceHeader::new(config, scenario, seed, controller.label()),
        records: Vec::new(),
    });
    let (mut kick_count, mut kick_triggers) = (0u32, 0u32);
    loop {
        let actions = obs
            .iter()
            .map(|o| controller.act(o))
            .collect::<Result<Vec<Action>, _>>()?;
        kick_triggers += actions.iter().filter(|a| a.kick_triggered()).count() as u32;
        let r = env_step(&mut state, &actions, config)?;
        kick_count += r.events.kicks.iter().filter(|k| **k).count() as u32;
        if let Some(t) = trace.as_mut() {
            t.records.push(StepRecord::capture(&state, &actions, &r));
        }
        if let Some(outcome) = r.outcome(state.elapsed(config.dt)) {
            let result = TrialResult {
                scenario: scenario.name.as_str().to_string(),
                seed,
                outcome,
                step_count: state.step,
                kick_count,
                kick_triggers,
                trace_path: None,
            };
            return Ok((result, trace));
        }
        obs = r.observations;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub scenario: String,
    pub n_trials: usize,
    pub n_successes: usize,
    pub success_rate: ConfidenceInterval,
    /// Over successful trials only; `None` when no trial succeeded.
    pub time_to_score: Option<ConfidenceInterval>,
    pub confidence: f64,
    pub mean_kicks: f64,
    /// Kick triggers per agent-step.
    pub kick_trigger_rate: f64,
}

/// Aggregates trials of one scenario. Trials are sorted by seed first so the
/// summary is independent of completion order.
pub fn summarize(
    scenario: &str,
    trials: &[TrialResult],
    num_agents: usize,
) -> Result<MetricsSummary, EvalError> {
    if trials.is_empty() {
        return Err(EvalError::NoTrials);
    }
    let mut sorted: Vec<&TrialResult> = trials.iter().collect();
    sorted.sort_by_key(|t| t.seed);
    let successes: Vec<f64> = sorted
        .iter()
        .map(|t| if t.outcome.success { 1.0 } else { 0.0 })
        .collect();
    let times: Vec<f64> = sorted
        .iter()
        .filter_map(|t| t.outcome.time_to_score)
        .collect();
    let time_to_score = if times.is_empty() {
        None
    } else {
        Some(student_t_ci(&times, CONFIDENCE)?)
    };
    let n = sorted.len() as f64;
    let agent_steps: u64 = sorted
        .iter()
        .map(|t| t.step_count as u64 * num_agents as u64)
        .sum();
    Ok(MetricsSummary {
        scenario: scenario.to_string(),
        n_trials: sorted.len(),
        n_successes: times.len(),
        success_rate: student_t_ci(&successes, CONFIDENCE)?,
        time_to_score,
        confidence: CONFIDENCE,
        mean_kicks: sorted.iter().map(|t| t.kick_count as f64).sum::<f64>() / n,
        kick_trigger_rate: if agent_steps == 0 {
            0.0
        } else {
            sorted.iter().map(|t| t.kick_triggers as f64).sum::<f64>() / agent_steps as f64
        },
    })
}

#[derive(Clone, Debug, Default)]
pub struct SuiteOptions {
    pub workers: usize,
    /// When set, every trial is recorded and written here as
    /// `<scenario>_seed<seed>.jsonl`.
    pub trace_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub summaries: Vec<MetricsSummary>,
    /// Per scenario, sorted by seed.
    pub trials: Vec<Vec<TrialResult>>,
}

pub fn trace_file_name(scenario: &str, seed: u64) -> String {
    format!("{scenario}_seed{seed}.jsonl")
}

/// Runs `n_trials` episodes per scenario with seeds `base_seed..base_seed + n_trials`.
pub fn run_suite(
    controller: &dyn Controller,
    scenarios: &[ScenarioSpec],
    config: &SimConfig,
    n_trials: usize,
    base_seed: u64,
    options: &SuiteOptions,
) -> Result<SuiteResult, EvalError> {
    if n_trials == 0 {
        return Err(EvalError::NoTrials);
    }
    if scenarios.is_empty() {
        return Err(EvalError::NoScenarios);
    }
    config.validate().map_err(EnvError::from)?;
    controller.check_layout(&ObsLayout::for_config(config).version())?;
    let executor = Executor::new(options.workers)?;
    let mut jobs: Vec<(usize, u64)> = (0..scenarios.len())
        .flat_map(|s| (0..n_trials as u64).map(move |i| (s, base_seed.wrapping_add(i))))
        .collect();
    let record = options.trace_dir.is_some();
    let results = executor.map(&mut jobs, |_, &mut (s, seed)| {
        let scenario = &scenarios[s];
        let (mut result, trace) = run_trial(controller, scenario, config, seed, record)?;
        if let (Some(dir), Some(trace)) = (&options.trace_dir, trace) {
            let path = dir.join(trace_file_name(scenario.name.as_str(), seed));
            export_replay(&trace, &path)?;
            result.trace_path = Some(path);
        }
        Ok::<_, EvalError>(result)
    });
    let mut trials: Vec<Vec<TrialResult>> = vec![Vec::with_capacity(n_trials); scenarios.len()];
    for (job, r) in jobs.iter().zip(results) {
        trials[job.0].push(r?);
    }
    let mut summaries = Vec::with_capacity(scenarios.len());
    for (spec, list) in scenarios.iter().zip(trials.iter_mut()) {
        list.sort_by_key(|t| t.seed);
        summaries.push(summarize(spec.name.as_str(), list, config.num_agents)?);
    }
    Ok(SuiteResult { summaries, trials })
}

/// Convenience for callers holding a path-like trace directory.
pub fn suite_options(workers: usize, trace_dir: Option<&Path>) -> SuiteOptions {
    SuiteOptions {
        workers,
        trace_dir: trace_dir.map(Path::to_path_buf),
    }
}
