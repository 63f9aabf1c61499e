//! Cooperative multi-agent environment boundary: reset, observations, the
//! shared reward and episode termination.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, SimConfig};
use crate::dynamics::{step_world, BallState, DynamicsError, RobotState, StepEvents, WorldState};
use crate::geometry::{egocentric_transform, Vec2};
use crate::scenario::{ScenarioError, ScenarioSpec};
use crate::SimRng;

pub const ACTION_DIM: usize = 5;

/// Version tag of the observation layout; bump whenever [`ObsLayout`] changes.
pub const OBS_LAYOUT_REVISION: u32 = 1;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("episode already finished; reset before stepping again")]
    EpisodeFinished,
    #[error("batch length mismatch: {worlds} worlds but {actions} action sets")]
    BatchLength { worlds: usize, actions: usize },
    #[error("buffer {name} has length {got}, expected {expected}")]
    BufferLength {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

/// Five-channel command. Kick fires when `kick > 0`, stand when `stand > 0`
/// and no kick; kick wins when both trigger.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub forward: f32,
    pub lateral: f32,
    pub angular: f32,
    pub kick: f32,
    pub stand: f32,
}

impl Action {
    pub fn from_array(a: [f32; ACTION_DIM]) -> Self {
        Self {
            forward: a[0],
            lateral: a[1],
            angular: a[2],
            kick: a[3],
            stand: a[4],
        }
    }

    /// Reads one action from the start of `s`; panics if `s` is shorter than
    /// [`ACTION_DIM`].
    pub fn from_slice(s: &[f32]) -> Self {
        Self::from_array([s[0], s[1], s[2], s[3], s[4]])
    }

    pub fn to_array(self) -> [f32; ACTION_DIM] {
        [
            self.forward,
            self.lateral,
            self.angular,
            self.kick,
            self.stand,
        ]
    }

    /// Channels clamped into `[-1, 1]`; NaN maps to 0.
    pub fn clamped(self) -> Self {
        let c = |v: f32| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
        Self::from_array(self.to_array().map(c))
    }

    pub fn kick_triggered(&self) -> bool {
        self.kick > 0.0
    }

    pub fn stand_triggered(&self) -> bool {
        self.stand > 0.0 && !self.kick_triggered()
    }
}

/// Per-agent feature vector; see [`ObsLayout`] for the field order.
pub type Observation = Vec<f32>;

/// Fixed observation layout. All positions and velocities are divided by
/// the field length.
///
/// | offset | len | field |
/// |---|---|---|
/// | 0 | 4 | own pose: x, y, sin h, cos h (global frame) |
/// | 4 | 2 | ball, egocentric |
/// | 6 | 2 | ball velocity, egocentric |
/// | 8 | 2·(agents−1) | teammates, egocentric, list order |
/// | … | 3·max_defenders | defenders: x, y, presence (zeros when absent) |
/// | … | 2 | attacked goal centre, egocentric |
/// | … | 2 | own goal centre, egocentric |
/// | … | 1 | kick timer / kick duration |
/// | … | 1 | elapsed / episode timeout |
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObsLayout {
    pub num_agents: usize,
    pub max_defenders: usize,
}

impl ObsLayout {
    pub const OWN_POSE: usize = 0;
    pub const BALL: usize = 4;
    pub const BALL_VELOCITY: usize = 6;
    pub const TEAMMATES: usize = 8;

    pub fn for_config(config: &SimConfig) -> Self {
        Self {
            num_agents: config.num_agents,
            max_defenders: config.num_defenders,
        }
    }

    pub fn defenders(&self) -> usize {
        Self::TEAMMATES + 2 * (self.num_agents - 1)
    }

    pub fn attacked_goal(&self) -> usize {
        self.defenders() + 3 * self.max_defenders
    }

    pub fn own_goal(&self) -> usize {
        self.attacked_goal() + 2
    }

    pub fn kick_timer(&self) -> usize {
        self.own_goal() + 2
    }

    pub fn elapsed(&self) -> usize {
        self.kick_timer() + 1
    }

    pub fn len(&self) -> usize {
        self.elapsed() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Layout identifier stored in policy files and replay traces.
    pub fn version(&self) -> String {
        format!(
            "soccer-obs-v{}-a{}-d{}",
            OBS_LAYOUT_REVISION, self.num_agents, self.max_defenders
        )
    }

    /// Ordered `(name, offset)` table of every scalar in the layout.
    pub fn fields(&self) -> Vec<(String, usize)> {
        let mut out = vec![
            ("own_x".to_string(), 0),
            ("own_y".into(), 1),
            ("own_sin_heading".into(), 2),
            ("own_cos_heading".into(), 3),
            ("ball_x".into(), 4),
            ("ball_y".into(), 5),
            ("ball_vx".into(), 6),
            ("ball_vy".into(), 7),
        ];
        for t in 0..self.num_agents - 1 {
            let o = Self::TEAMMATES + 2 * t;
            out.push((format!("teammate{t}_x"), o));
            out.push((format!("teammate{t}_y"), o + 1));
        }
        for d in 0..self.max_defenders {
            let o = self.defenders() + 3 * d;
            out.push((format!("defender{d}_x"), o));
            out.push((format!("defender{d}_y"), o + 1));
            out.push((format!("defender{d}_present"), o + 2));
        }
        let g = self.attacked_goal();
        out.push(("attacked_goal_x".into(), g));
        out.push(("attacked_goal_y".into(), g + 1));
        out.push(("own_goal_x".into(), g + 2));
        out.push(("own_goal_y".into(), g + 3));
        out.push(("kick_timer_frac".into(), self.kick_timer()));
        out.push(("elapsed_frac".into(), self.elapsed()));
        out
    }
}

/// Writes agent `agent`'s observation into `out` (length [`ObsLayout::len`]).
/// Observation noise, when enabled, perturbs every observed object position
/// (not the agent's own pose) before the egocentric transform; with noise
/// disabled `rng` is untouched.
#[allow(clippy::too_many_arguments)]
pub(crate) fn write_observation(
    robots: &[RobotState],
    num_agents: usize,
    ball: &BallState,
    step: u32,
    agent: usize,
    config: &SimConfig,
    rng: &mut SimRng,
    out: &mut [f32],
) {
    let layout = ObsLayout::for_config(config);
    debug_assert_eq!(out.len(), layout.len());
    let scale = 1.0 / config.field.length;
    let me = &robots[agent];
    let pose = &me.pose;
    let noise = (config.observation_noise && config.observation_noise_std > 0.0)
        .then(|| Normal::new(0.0, config.observation_noise_std).expect("std validated"));
    let observe = |p: Vec2, rng: &mut SimRng| -> Vec2 {
        let p = match &noise {
            Some(n) => Vec2::new(p.x + n.sample(rng), p.y + n.sample(rng)),
            None => p,
        };
        egocentric_transform(pose, p) * scale
    };
    let h = pose.heading();
    put(out, ObsLayout::OWN_POSE, pose.position * scale);
    put(out, ObsLayout::OWN_POSE + 2, Vec2::new(h.sin(), h.cos()));
    put(out, ObsLayout::BALL, observe(ball.position, rng));
    put(
        out,
        ObsLayout::BALL_VELOCITY,
        ball.velocity.rotate(-h) * scale,
    );
    for (slot, (_, mate)) in robots[..num_agents]
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != agent)
        .enumerate()
    {
        put(
            out,
            ObsLayout::TEAMMATES + 2 * slot,
            observe(mate.pose.position, rng),
        );
    }
    let defenders = &robots[num_agents..];
    for d in 0..layout.max_defenders {
        let o = layout.defenders() + 3 * d;
        match defenders.get(d) {
            Some(def) => {
                put(out, o, observe(def.pose.position, rng));
                out[o + 2] = 1.0;
            }
            None => out[o..o + 3].fill(0.0),
        }
    }
    put(
        out,
        layout.attacked_goal(),
        egocentric_transform(pose, config.field.attacked_goal_center()) * scale,
    );
    put(
        out,
        layout.own_goal(),
        egocentric_transform(pose, config.field.own_goal_center()) * scale,
    );
    out[layout.kick_timer()] = if config.robot.kick_duration > 0.0 {
        (me.kick_timer / config.robot.kick_duration) as f32
    } else {
        0.0
    };
    out[layout.elapsed()] = (step as f64 / config.timeout_steps() as f64) as f32;
}

fn put(out: &mut [f32], offset: usize, v: Vec2) {
    out[offset] = v.x as f32;
    out[offset + 1] = v.y as f32;
}

/// Builds one agent's observation, drawing any observation noise from `rng`.
pub fn build_observation(
    state: &WorldState,
    agent_index: usize,
    config: &SimConfig,
    rng: &mut SimRng,
) -> Observation {
    let mut out = vec![0.0; ObsLayout::for_config(config).len()];
    write_observation(
        &state.robots,
        state.num_agents,
        &state.ball,
        state.step,
        agent_index,
        config,
        rng,
        &mut out,
    );
    out
}

impl WorldState {
    /// Observations for every agent, noise drawn from the world's generator.
    pub fn observe_all(&mut self, config: &SimConfig) -> Vec<Observation> {
        let len = ObsLayout::for_config(config).len();
        (0..self.num_agents)
            .map(|i| {
                let mut out = vec![0.0; len];
                self.observe_into(i, config, &mut out);
                out
            })
            .collect()
    }

    pub(crate) fn observe_into(&mut self, agent: usize, config: &SimConfig, out: &mut [f32]) {
        let WorldState {
            robots,
            num_agents,
            ball,
            step,
            rng,
            ..
        } = self;
        write_observation(robots, *num_agents, ball, *step, agent, config, rng, out);
    }
}

/// Shaping potential: negative ball distance to the attacked goal centre,
/// in field lengths.
pub fn potential(ball: &BallState, config: &SimConfig) -> f64 {
    -ball.position.distance(config.field.attacked_goal_center()) / config.field.length
}

fn reward_from(phi_prev: f64, phi_next: f64, events: &StepEvents, config: &SimConfig) -> f64 {
    let r = &config.reward;
    let mut reward = -r.time_penalty + r.shaping * (phi_next - phi_prev);
    if events.goal_scored {
        reward += r.goal;
    }
    if events.out_of_bounds {
        reward += r.out_of_bounds;
    }
    reward
}

/// Shared team reward for the transition `prev → next`.
pub fn compute_reward(
    prev: &WorldState,
    next: &WorldState,
    events: &StepEvents,
    config: &SimConfig,
) -> f64 {
    reward_from(
        potential(&prev.ball, config),
        potential(&next.ball, config),
        events,
        config,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    Timeout,
    OutOfBounds,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub success: bool,
    /// Seconds until the goal; `None` unless `success`.
    pub time_to_score: Option<f64>,
    pub failure_reason: Option<FailureReason>,
}

/// Step result without observations; observations are written by the caller.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSummary {
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub events: StepEvents,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observations: Vec<Observation>,
    /// The one team reward, identical for every agent.
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub events: StepEvents,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }

    /// Episode outcome if this step ended the episode.
    pub fn outcome(&self, elapsed: f64) -> Option<EpisodeOutcome> {
        outcome_of(self.terminated, self.truncated, &self.events, elapsed)
    }
}

impl StepSummary {
    pub fn outcome(&self, elapsed: f64) -> Option<EpisodeOutcome> {
        outcome_of(self.terminated, self.truncated, &self.events, elapsed)
    }
}

fn outcome_of(
    terminated: bool,
    truncated: bool,
    events: &StepEvents,
    elapsed: f64,
) -> Option<EpisodeOutcome> {
    if events.goal_scored {
        Some(EpisodeOutcome {
            success: true,
            time_to_score: Some(elapsed),
            failure_reason: None,
        })
    } else if terminated {
        Some(EpisodeOutcome {
            success: false,
            time_to_score: None,
            failure_reason: Some(FailureReason::OutOfBounds),
        })
    } else if truncated {
        Some(EpisodeOutcome {
            success: false,
            time_to_score: None,
            failure_reason: Some(FailureReason::Timeout),
        })
    } else {
        None
    }
}

/// Starts an episode. The world generator is seeded from `seed` alone, so
/// equal arguments give identical worlds and observations.
pub fn reset(
    scenario: &ScenarioSpec,
    config: &SimConfig,
    seed: u64,
) -> Result<(WorldState, Vec<Observation>), EnvError> {
    config.validate()?;
    let mut rng = SimRng::seed_from_u64(seed);
    let placement = scenario.instantiate(config, &mut rng)?;
    let robots = placement
        .agent_poses
        .iter()
        .chain(&placement.defender_poses)
        .map(|p| RobotState::at(*p))
        .collect();
    let mut state = WorldState {
        robots,
        num_agents: config.num_agents,
        ball: BallState::at_rest(placement.ball_position),
        step: 0,
        rng,
        finished: false,
    };
    let obs = state.observe_all(config);
    Ok((state, obs))
}

/// Steps the world and writes the next observations into `obs_out`
/// (agent-major, `num_agents · layout.len()` floats).
pub fn env_step_into(
    state: &mut WorldState,
    actions: &[Action],
    config: &SimConfig,
    obs_out: &mut [f32],
) -> Result<StepSummary, EnvError> {
    if state.finished {
        return Err(EnvError::EpisodeFinished);
    }
    let len = ObsLayout::for_config(config).len();
    let expected = len * state.num_agents;
    if obs_out.len() != expected {
        return Err(EnvError::BufferLength {
            name: "observations",
            expected,
            got: obs_out.len(),
        });
    }
    let phi_prev = potential(&state.ball, config);
    let events = step_world(state, actions, config)?;
    let phi_next = potential(&state.ball, config);
    let terminated = events.goal_scored || events.out_of_bounds;
    let truncated = !terminated && state.step >= config.timeout_steps();
    state.finished = terminated || truncated;
    for (i, chunk) in obs_out.chunks_exact_mut(len).enumerate() {
        state.observe_into(i, config, chunk);
    }
    Ok(StepSummary {
        reward: reward_from(phi_prev, phi_next, &events, config),
        terminated,
        truncated,
        events,
    })
}

/// One environment step. Rejects stepping an episode that already ended.
pub fn env_step(
    state: &mut WorldState,
    actions: &[Action],
    config: &SimConfig,
) -> Result<StepResult, EnvError> {
    let len = ObsLayout::for_config(config).len();
    let mut flat = vec![0.0; len * state.num_agents];
    let s = env_step_into(state, actions, config, &mut flat)?;
    Ok(StepResult {
        observations: flat.chunks_exact(len).map(<[f32]>::to_vec).collect(),
        reward: s.reward,
        terminated: s.terminated,
        truncated: s.truncated,
        events: s.events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PresetName;
    use crate::geometry::Pose2D;
    use crate::scenario::ScenarioName;

    fn quiet() -> SimConfig {
        let mut c = PresetName::EvalRealistic.config();
        c.ball_contact_noise = false;
        c
    }

    fn single_agent_world(c: &SimConfig, ball: Vec2) -> WorldState {
        WorldState {
            robots: vec![RobotState::at(Pose2D::new(Vec2::ZERO, 0.0))],
            num_agents: 1,
            ball: BallState::at_rest(ball),
            step: 0,
            rng: SimRng::seed_from_u64(c.seed),
            finished: false,
        }
    }

    #[test]
    fn action_trigger_rules() {
        let a = Action::from_array([0.0, 0.0, 0.0, 0.5, 0.5]);
        assert!(a.kick_triggered() && !a.stand_triggered());
        let b = Action::from_array([0.0, 0.0, 0.0, -0.5, 0.5]);
        assert!(!b.kick_triggered() && b.stand_triggered());
        let c = Action::from_array([f32::NAN, 3.0, -3.0, 0.0, 0.0]).clamped();
        assert_eq!(c.to_array(), [0.0, 1.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn layout_is_contiguous() {
        let l = ObsLayout {
            num_agents: 2,
            max_defenders: 1,
        };
        assert_eq!(l.len(), 19);
        let fields = l.fields();
        assert_eq!(fields.len(), l.len());
        for (i, (_, off)) in fields.iter().enumerate() {
            assert_eq!(*off, i);
        }
        assert_eq!(l.version(), "soccer-obs-v1-a2-d1");
    }

    #[test]
    fn ball_slot_is_scaled_egocentric() {
        let mut c = quiet();
        c.num_agents = 1;
        let w = single_agent_world(&c, Vec2::new(1.0, 0.0));
        let mut rng = SimRng::seed_from_u64(0);
        let obs = build_observation(&w, 0, &c, &mut rng);
        assert!((obs[ObsLayout::BALL] - (1.0 / 9.0) as f32).abs() < 1e-7);
        assert_eq!(obs[ObsLayout::BALL + 1], 0.0);
    }

    #[test]
    fn absent_defender_is_zero_padded() {
        let c = quiet();
        let (w, obs) = reset(&ScenarioSpec::builtin(&ScenarioName::BS1).unwrap(), &c, 1).unwrap();
        let l = ObsLayout::for_config(&c);
        assert_eq!(w.defenders().len(), 0);
        for o in &obs {
            assert_eq!(&o[l.defenders()..l.defenders() + 3], &[0.0, 0.0, 0.0]);
        }
        let (_, obs) = reset(&ScenarioSpec::builtin(&ScenarioName::D1).unwrap(), &c, 1).unwrap();
        assert_eq!(obs[0][l.defenders() + 2], 1.0);
        // D1's defender sits 1.3 m straight ahead of agent A.
        assert!((obs[0][l.defenders()] - (1.3 / 9.0) as f32).abs() < 1e-6);
    }

    #[test]
    fn noise_free_observation_leaves_rng_alone() {
        let c = quiet();
        let (w, _) = reset(&ScenarioSpec::builtin(&ScenarioName::D2).unwrap(), &c, 5).unwrap();
        let mut rng = SimRng::seed_from_u64(11);
        let before = rng.clone();
        build_observation(&w, 1, &c, &mut rng);
        assert_eq!(rng, before);
    }

    #[test]
    fn reward_examples() {
        let c = quiet();
        let mut prev = single_agent_world(&c, Vec2::new(0.0, 0.0));
        prev.num_agents = 1;
        let next = prev.clone();
        let none = StepEvents::default();
        assert!((compute_reward(&prev, &next, &none, &c) + 0.001).abs() < 1e-12);

        let mut moved = prev.clone();
        moved.ball.position = Vec2::new(0.9, 0.0);
        // Φ changes from -4.5/9 to -3.6/9, a gain of exactly 0.1.
        let r = compute_reward(&prev, &moved, &none, &c);
        assert!((r - (-0.001 + 0.1)).abs() < 1e-12, "{r}");

        let mut at_goal = prev.clone();
        at_goal.ball.position = Vec2::new(4.45, 0.0);
        let mut scored = at_goal.clone();
        scored.ball.position = Vec2::new(4.55, 0.0);
        let goal = StepEvents {
            goal_scored: true,
            ..StepEvents::default()
        };
        let r = compute_reward(&at_goal, &scored, &goal, &c);
        assert!((r - (1.0 - 0.001)).abs() < 0.02, "{r}");
    }

    #[test]
    fn reset_is_deterministic() {
        let c = PresetName::FullMarl.config();
        let s = ScenarioSpec::builtin(&ScenarioName::BS1).unwrap();
        let (w1, o1) = reset(&s, &c, 7).unwrap();
        let (w2, o2) = reset(&s, &c, 7).unwrap();
        assert_eq!(o1, o2);
        assert_eq!(w1, w2);
    }

    #[test]
    fn reset_rejects_mismatched_scenario() {
        let mut c = PresetName::FullMarl.config();
        c.num_agents = 3;
        let s = ScenarioSpec::builtin(&ScenarioName::BS1).unwrap();
        assert!(matches!(reset(&s, &c, 0), Err(EnvError::Scenario(_))));
    }

    #[test]
    fn scoring_step_terminates_with_time() {
        let c = quiet();
        let mut w = single_agent_world(&c, Vec2::new(0.0, 0.0));
        w.robots[0].pose = Pose2D::new(Vec2::new(4.2, 0.0), 0.0);
        w.ball.position = Vec2::new(4.4, 0.0);
        let mut cfg = c.clone();
        cfg.num_agents = 1;
        let r = env_step(
            &mut w,
            &[Action::from_array([0.0, 0.0, 0.0, 1.0, 0.0])],
            &cfg,
        )
        .unwrap();
        assert!(r.terminated && !r.truncated && r.events.goal_scored);
        let o = r.outcome(w.elapsed(cfg.dt)).unwrap();
        assert!(o.success);
        assert!((o.time_to_score.unwrap() - 0.1).abs() < 1e-12);
        assert!(matches!(
            env_step(&mut w, &[Action::default()], &cfg),
            Err(EnvError::EpisodeFinished)
        ));
    }

    #[test]
    fn timeout_truncates_on_final_step() {
        let c = quiet();
        let s = ScenarioSpec::builtin(&ScenarioName::BS1).unwrap();
        let (mut w, _) = reset(&s, &c, 0).unwrap();
        let zero = [Action::default(); 2];
        for i in 1..=600 {
            let r = env_step(&mut w, &zero, &c).unwrap();
            assert_eq!(r.truncated, i == 600);
            assert!(!r.terminated);
        }
        assert!(env_step(&mut w, &zero, &c).is_err());
    }

    #[test]
    fn sideline_kick_fails_out_of_bounds() {
        let c = quiet();
        let mut cfg = c.clone();
        cfg.num_agents = 1;
        let mut w = single_agent_world(&cfg, Vec2::new(0.0, 2.95));
        w.robots[0].pose = Pose2D::new(Vec2::new(0.0, 2.75), std::f64::consts::FRAC_PI_2);
        let r = env_step(
            &mut w,
            &[Action::from_array([0.0, 0.0, 0.0, 1.0, 0.0])],
            &cfg,
        )
        .unwrap();
        assert!(r.terminated);
        let o = r.outcome(0.1).unwrap();
        assert_eq!(o.failure_reason, Some(FailureReason::OutOfBounds));
        assert!(!o.success && o.time_to_score.is_none());
    }
}
