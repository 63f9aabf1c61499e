//! Line-delimited JSON replay traces.
//!
//! Line 1 is the [`TraceHeader`]; every following line is one [`StepRecord`]
//! holding the world state *after* that step. Floats are written in shortest
//! round-trip form, so a trace re-simulated from its header reproduces every
//! record bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SimConfig;
use crate::dynamics::{BallState, RobotState, StepEvents, WorldState};
use crate::env::{env_step, reset, Action, EnvError, ObsLayout, StepResult};
use crate::scenario::ScenarioSpec;

pub const REPLAY_FORMAT: &str = "soccer-sim-replay";
pub const REPLAY_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line} (byte {offset}): {message}")]
    Parse {
        path: String,
        line: usize,
        offset: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("trace has no step records (was the trial recorded?)")]
    Empty,
    #[error("divergence at step {step}: {field} recorded {recorded} but re-simulation gives {simulated}")]
    Divergence {
        step: u32,
        field: String,
        recorded: String,
        simulated: String,
    },
    #[error("trace ends at step {last_step} before the episode finished")]
    Incomplete { last_step: u32 },
    #[error("trace continues after the episode ended at step {step}")]
    Overlong { step: u32 },
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub obs_layout_version: String,
    pub config: SimConfig,
    pub scenario: ScenarioSpec,
    pub seed: u64,
    pub controller: String,
}

impl TraceHeader {
    pub fn new(config: &SimConfig, scenario: &ScenarioSpec, seed: u64, controller: String) -> Self {
        Self {
            format: REPLAY_FORMAT.to_string(),
            version: REPLAY_VERSION,
            obs_layout_version: ObsLayout::for_config(config).version(),
            config: config.clone(),
            scenario: scenario.clone(),
            seed,
            controller,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    /// Agents first, then defenders.
    pub robots: Vec<RobotState>,
    pub ball: BallState,
    pub actions: Vec<Action>,
    pub events: StepEvents,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

impl StepRecord {
    pub fn capture(state: &WorldState, actions: &[Action], result: &StepResult) -> Self {
        Self {
            step: state.step,
            robots: state.robots.clone(),
            ball: state.ball,
            actions: actions.to_vec(),
            events: result.events.clone(),
            reward: result.reward,
            terminated: result.terminated,
            truncated: result.truncated,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<StepRecord>,
}

impl Trace {
    pub fn final_record(&self) -> Option<&StepRecord> {
        self.records.last()
    }
}

/// Writes `trace` as line-delimited JSON. Rejects traces without records.
pub fn export_replay(trace: &Trace, path: impl AsRef<Path>) -> Result<(), ReplayError> {
    if trace.records.is_empty() {
        return Err(ReplayError::Empty);
    }
    let path = path.as_ref();
    let io = |source| ReplayError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let json = |e: serde_json::Error| ReplayError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    serde_json::to_writer(&mut w, &trace.header).map_err(json)?;
    w.write_all(b"\n").map_err(io)?;
    for r in &trace.records {
        serde_json::to_writer(&mut w, r).map_err(json)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Parses a trace from text; `path` is only used in error messages.
pub fn parse_trace(text: &str, path: &str) -> Result<Trace, ReplayError> {
    let mut offset = 0;
    let mut header: Option<TraceHeader> = None;
    let mut records = Vec::new();
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let start = offset;
        offset += line.len();
        let body = line.trim_end_matches(['\n', '\r']);
        if body.is_empty() {
            continue;
        }
        let err = |e: serde_json::Error| ReplayError::Parse {
            path: path.to_string(),
            line: i + 1,
            offset: start + e.column().saturating_sub(1),
            message: e.to_string(),
        };
        match &header {
            None => {
                let h: TraceHeader = serde_json::from_str(body).map_err(err)?;
                if h.format != REPLAY_FORMAT || h.version != REPLAY_VERSION {
                    return Err(ReplayError::Format {
                        path: path.to_string(),
                        message: format!(
                            "unsupported trace {:?} version {} (expected {REPLAY_FORMAT:?} version {REPLAY_VERSION})",
                            h.format, h.version
                        ),
                    });
                }
                header = Some(h);
            }
            Some(_) => records.push(serde_json::from_str(body).map_err(err)?),
        }
    }
    let header = header.ok_or_else(|| ReplayError::Format {
        path: path.to_string(),
        message: "empty file, no trace header".to_string(),
    })?;
    Ok(Trace { header, records })
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Trace, ReplayError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ReplayError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_trace(&text, &path.display().to_string())
}

fn labelled_bits(robots: &[RobotState], ball: &BallState) -> Vec<(String, f64)> {
    let mut out = Vec::with_capacity(robots.len() * 6 + 4);
    for (i, r) in robots.iter().enumerate() {
        out.push((format!("robots[{i}].x"), r.pose.position.x));
        out.push((format!("robots[{i}].y"), r.pose.position.y));
        out.push((format!("robots[{i}].heading"), r.pose.heading()));
        out.push((format!("robots[{i}].kick_timer"), r.kick_timer));
        out.push((
            format!("robots[{i}].last_displacement.x"),
            r.last_displacement.x,
        ));
        out.push((
            format!("robots[{i}].last_displacement.y"),
            r.last_displacement.y,
        ));
    }
    out.push(("ball.x".into(), ball.position.x));
    out.push(("ball.y".into(), ball.position.y));
    out.push(("ball.vx".into(), ball.velocity.x));
    out.push(("ball.vy".into(), ball.velocity.y));
    out
}

fn compare(
    step: u32,
    recorded: &StepRecord,
    state: &WorldState,
    result: &StepResult,
) -> Result<(), ReplayError> {
    let diverge = |field: String, recorded: String, simulated: String| ReplayError::Divergence {
        step,
        field,
        recorded,
        simulated,
    };
    if recorded.step != state.step {
        return Err(diverge(
            "step".into(),
            recorded.step.to_string(),
            state.step.to_string(),
        ));
    }
    if recorded.robots.len() != state.robots.len() {
        return Err(diverge(
            "robot count".into(),
            recorded.robots.len().to_string(),
            state.robots.len().to_string(),
        ));
    }
    let want = labelled_bits(&recorded.robots, &recorded.ball);
    let got = labelled_bits(&state.robots, &state.ball);
    for ((name, a), (_, b)) in want.iter().zip(&got) {
        if a.to_bits() != b.to_bits() {
            return Err(diverge(name.clone(), format!("{a:?}"), format!("{b:?}")));
        }
    }
    for (i, (a, b)) in recorded.robots.iter().zip(&state.robots).enumerate() {
        if a.standing != b.standing {
            return Err(diverge(
                format!("robots[{i}].standing"),
                a.standing.to_string(),
                b.standing.to_string(),
            ));
        }
    }
    if recorded.events != result.events {
        return Err(diverge(
            "events".into(),
            format!("{:?}", recorded.events),
            format!("{:?}", result.events),
        ));
    }
    if recorded.reward.to_bits() != result.reward.to_bits() {
        return Err(diverge(
            "reward".into(),
            format!("{:?}", recorded.reward),
            format!("{:?}", result.reward),
        ));
    }
    if (recorded.terminated, recorded.truncated) != (result.terminated, result.truncated) {
        return Err(diverge(
            "termination".into(),
            format!("{:?}", (recorded.terminated, recorded.truncated)),
            format!("{:?}", (result.terminated, result.truncated)),
        ));
    }
    Ok(())
}

/// Re-simulates the trace from its header with the recorded actions and
/// checks every record bit for bit. Returns the number of verified steps.
pub fn verify_trace(trace: &Trace) -> Result<usize, ReplayError> {
    if trace.records.is_empty() {
        return Err(ReplayError::Empty);
    }
    let h = &trace.header;
    let (mut state, _) = reset(&h.scenario, &h.config, h.seed)?;
    for (i, record) in trace.records.iter().enumerate() {
        if state.finished {
            return Err(ReplayError::Overlong { step: state.step });
        }
        let result = env_step(&mut state, &record.actions, &h.config)?;
        compare(i as u32 + 1, record, &state, &result)?;
    }
    if !state.finished {
        return Err(ReplayError::Incomplete {
            last_step: state.step,
        });
    }
    Ok(trace.records.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PresetName;
    use crate::evaluation::run_trial;
    use crate::policy::{ScriptedController, ZeroController};
    use crate::scenario::ScenarioName;

    fn recorded(preset: PresetName, scenario: ScenarioName, seed: u64) -> Trace {
        let config = preset.config();
        let spec = ScenarioSpec::builtin(&scenario).unwrap();
        let ctl = ScriptedController::new(&config);
        run_trial(&ctl, &spec, &config, seed, true)
            .unwrap()
            .1
            .unwrap()
    }

    #[test]
    fn timeout_episode_has_one_record_per_step() {
        let config = PresetName::FullMarl.config();
        let spec = ScenarioSpec::builtin(&ScenarioName::BS1).unwrap();
        let (_, trace) = run_trial(&ZeroController, &spec, &config, 0, true).unwrap();
        let trace = trace.unwrap();
        assert_eq!(trace.records.len(), 600);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        export_replay(&trace, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 601);
    }

    #[test]
    fn file_round_trip_verifies() {
        let trace = recorded(PresetName::FullMarl, ScenarioName::D3, 5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        export_replay(&trace, &path).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back, trace);
        assert_eq!(verify_trace(&back).unwrap(), trace.records.len());
    }

    #[test]
    fn tampered_ball_names_step() {
        let mut trace = recorded(PresetName::EvalRealistic, ScenarioName::BS2, 1);
        let k = trace.records.len() / 2;
        trace.records[k].ball.position.x += 1e-12;
        match verify_trace(&trace) {
            Err(ReplayError::Divergence { step, field, .. }) => {
                assert_eq!(step as usize, k + 1);
                assert_eq!(field, "ball.x");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_trace_rejected() {
        let mut trace = recorded(PresetName::FullMarl, ScenarioName::BS1, 0);
        trace.records.clear();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            export_replay(&trace, dir.path().join("x")),
            Err(ReplayError::Empty)
        ));
    }

    #[test]
    fn truncation_detected() {
        let trace = recorded(PresetName::FullMarl, ScenarioName::BS1, 0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        export_replay(&trace, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut = &text[..text.len() - 20];
        match parse_trace(cut, "t.jsonl") {
            Err(ReplayError::Parse { line, offset, .. }) => {
                assert_eq!(line, trace.records.len() + 1);
                assert!(offset < cut.len() && offset > 0);
            }
            other => panic!("{other:?}"),
        }
        let whole_lines: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        let short = parse_trace(&whole_lines, "t").unwrap();
        assert!(matches!(
            verify_trace(&short),
            Err(ReplayError::Incomplete { last_step: 2 })
        ));
        assert!(matches!(
            parse_trace("", "t"),
            Err(ReplayError::Format { .. })
        ));
    }
}
