//! Hand-written baseline controllers that read only the observation vector.

use crate::config::SimConfig;
use crate::env::{Action, ObsLayout};
use crate::geometry::Vec2;

use super::{Controller, PolicyError};

/// Outputs the zero action for every agent.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroController;

impl Controller for ZeroController {
    fn act(&self, _observation: &[f32]) -> Result<Action, PolicyError> {
        Ok(Action::default())
    }

    fn label(&self) -> String {
        "zero".to_string()
    }
}

/// Chase, align, kick.
///
/// The agent nearest the ball walks to a standoff just inside kick range,
/// turns so that its heading points from the ball to the attacked goal centre,
/// and kicks once aligned. Every other agent stands still.
#[derive(Clone, Debug)]
pub struct ScriptedController {
    layout: ObsLayout,
    field_length: f64,
    dt: f64,
    max_forward: f64,
    max_lateral: f64,
    max_angular: f64,
    kick_range: f64,
    standoff: f64,
    goal_half_width: f64,
}

impl ScriptedController {
    pub fn new(config: &SimConfig) -> Self {
        let r = &config.robot;
        Self {
            layout: ObsLayout::for_config(config),
            field_length: config.field.length,
            dt: config.dt,
            max_forward: r.max_forward_speed,
            max_lateral: r.max_lateral_speed,
            max_angular: r.max_angular_speed,
            kick_range: r.kick_range,
            standoff: 0.5 * (r.half_diagonal() + r.kick_range),
            goal_half_width: 0.5 * config.field.goal_width,
        }
    }

    fn read(&self, obs: &[f32], offset: usize) -> Vec2 {
        Vec2::new(obs[offset] as f64, obs[offset + 1] as f64) * self.field_length
    }

    fn is_chaser(&self, obs: &[f32], ball: Vec2) -> bool {
        let mine = ball.norm();
        (0..self.layout.num_agents - 1).all(|t| {
            let mate = self.read(obs, ObsLayout::TEAMMATES + 2 * t);
            mine <= mate.distance(ball)
        })
    }
}

impl Controller for ScriptedController {
    fn act(&self, obs: &[f32]) -> Result<Action, PolicyError> {
        if obs.len() != self.layout.len() {
            return Err(PolicyError::InputDimension {
                expected: self.layout.len(),
                got: obs.len(),
            });
        }
        let ball = self.read(obs, ObsLayout::BALL);
        if !self.is_chaser(obs, ball) {
            return Ok(Action {
                stand: 1.0,
                ..Action::default()
            });
        }
        let goal = self.read(obs, self.layout.attacked_goal());
        let to_goal = goal - ball;
        let heading_error = to_goal.angle();
        let turn = heading_error / (self.max_angular * self.dt);

        let dist = ball.norm();
        let mut action = Action {
            angular: turn.clamp(-1.0, 1.0) as f32,
            ..Action::default()
        };
        let tolerance = 0.5 * (self.goal_half_width / to_goal.norm().max(1e-9)).atan();
        if dist <= 0.95 * self.kick_range && heading_error.abs() <= tolerance {
            action.kick = 1.0;
            return Ok(action);
        }
        if dist > self.standoff {
            let step = ball * ((dist - self.standoff) / dist);
            let f = step.x / (self.max_forward * self.dt);
            let l = step.y / (self.max_lateral * self.dt);
            let s = f.abs().max(l.abs()).max(1.0);
            action.forward = (f / s) as f32;
            action.lateral = (l / s) as f32;
        }
        Ok(action)
    }

    fn obs_layout_version(&self) -> Option<&str> {
        None
    }

    fn label(&self) -> String {
        "scripted".to_string()
    }
}
