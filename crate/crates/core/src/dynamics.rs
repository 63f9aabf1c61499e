//! World transition function: kinematic robots, a decelerating point ball,
//! kick and push contacts, reflective static defenders.
//!
//! One step runs, in order: for each agent (list order) `apply_action`,
//! `resolve_kick`, then `resolve_push` if it did not kick; then every defender
//! contact; then `integrate_ball`; then goal/out-of-bounds detection.
//! Robots never interact with each other.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{RobotSpec, SimConfig};
use crate::env::Action;
use crate::field::{in_goal, out_of_bounds, FieldSpec};
use crate::geometry::{OrientedRect, Pose2D, Vec2};
use crate::SimRng;

/// Clearance used when a contact places the ball outside a robot body.
const CONTACT_CLEARANCE: f64 = 1e-6;
/// Kick timers below this are treated as expired.
const TIMER_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("expected {expected} actions (one per agent), got {got}")]
    ActionCount { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2D,
    /// Seconds left in the current kick; the robot is frozen while positive.
    pub kick_timer: f64,
    pub standing: bool,
    /// Translation applied during the last step, global frame.
    pub last_displacement: Vec2,
}

impl RobotState {
    pub fn at(pose: Pose2D) -> Self {
        Self {
            pose,
            ..Self::default()
        }
    }

    pub fn body(&self, spec: &RobotSpec) -> OrientedRect {
        OrientedRect::new(self.pose, spec.body_length, spec.body_width)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl BallState {
    pub fn at_rest(position: Vec2) -> Self {
        Self {
            position,
            velocity: Vec2::ZERO,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// Complete Markov state of one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    /// Agents first, then defenders.
    pub robots: Vec<RobotState>,
    pub num_agents: usize,
    pub ball: BallState,
    /// Steps taken since reset; elapsed time is `step · dt`.
    pub step: u32,
    pub rng: SimRng,
    /// Set once the episode has terminated or been truncated.
    pub finished: bool,
}

impl WorldState {
    pub fn agents(&self) -> &[RobotState] {
        &self.robots[..self.num_agents]
    }

    pub fn defenders(&self) -> &[RobotState] {
        &self.robots[self.num_agents..]
    }

    pub fn elapsed(&self, dt: f64) -> f64 {
        self.step as f64 * dt
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepEvents {
    pub goal_scored: bool,
    pub out_of_bounds: bool,
    pub kicks: Vec<bool>,
    pub pushes: Vec<bool>,
    pub defender_contact: bool,
}

impl StepEvents {
    /// Whether any contact changed the ball velocity this step.
    pub fn any_contact(&self) -> bool {
        self.defender_contact || self.kicks.iter().chain(&self.pushes).any(|&b| b)
    }
}

/// Moves one robot according to its command. The robot is frozen while a
/// kick is in progress and when the stand channel triggers.
pub fn apply_action(
    robot: &RobotState,
    action: &Action,
    spec: &RobotSpec,
    field: &FieldSpec,
    dt: f64,
) -> RobotState {
    let mut next = *robot;
    next.last_displacement = Vec2::ZERO;
    if robot.kick_timer > 0.0 {
        let t = robot.kick_timer - dt;
        next.kick_timer = if t > TIMER_EPS { t } else { 0.0 };
        next.standing = false;
        return next;
    }
    let a = action.clamped();
    next.standing = a.stand_triggered();
    if next.standing {
        return next;
    }
    let local = Vec2::new(
        a.forward as f64 * spec.max_forward_speed * dt,
        a.lateral as f64 * spec.max_lateral_speed * dt,
    );
    let start = robot.pose.position;
    let target = field.clamp(start + local.rotate(robot.pose.heading()));
    next.pose.position = target;
    next.pose
        .rotate_by(a.angular as f64 * spec.max_angular_speed * dt);
    next.last_displacement = target - start;
    next
}

/// Applies a kick if the kick channel triggers, the ball is within range and
/// no kick is in progress. Kicks are exact: no noise, direction = heading.
pub fn resolve_kick(
    robot: &mut RobotState,
    action: &Action,
    ball: &mut BallState,
    spec: &RobotSpec,
) -> bool {
    if !action.kick_triggered() || robot.kick_timer > 0.0 {
        return false;
    }
    if robot.pose.position.distance(ball.position) > spec.kick_range {
        return false;
    }
    ball.velocity = robot.pose.forward() * spec.kick_speed;
    robot.kick_timer = spec.kick_duration;
    true
}

/// Pushes the ball when it lies inside a moving robot's body. With contact
/// noise enabled the direction and speed are perturbed uniformly; otherwise
/// no randomness is consumed.
pub fn resolve_push(
    robot: &RobotState,
    ball: &mut BallState,
    config: &SimConfig,
    rng: &mut SimRng,
) -> bool {
    let Some(dir) = robot.last_displacement.normalized() else {
        return false;
    };
    let body = robot.body(&config.robot);
    if !body.contains(ball.position) {
        return false;
    }
    let local = body.to_local(ball.position);
    let local_dir = dir.rotate(-robot.pose.heading());
    let (exit, _) = body.local_exit(local, local_dir);
    ball.position = body.to_global(local + local_dir * (exit + CONTACT_CLEARANCE));

    let mut velocity = dir * config.robot.push_speed;
    if config.ball_contact_noise {
        let (angle, frac) = (config.contact_noise_angle, config.contact_noise_speed_frac);
        let dtheta = if angle > 0.0 {
            rng.gen_range(-angle..=angle)
        } else {
            0.0
        };
        let scale = if frac > 0.0 {
            rng.gen_range(1.0 - frac..=1.0 + frac)
        } else {
            1.0
        };
        velocity = velocity.rotate(dtheta) * scale;
    }
    ball.velocity = velocity;
    true
}

/// Reflects a moving ball off a static defender's body. The normal velocity
/// component at the struck face is reversed and scaled by the restitution;
/// the tangential component is kept. Detection is swept over the coming step
/// so fast balls cannot tunnel through.
pub fn resolve_defender_contact(
    defender: &RobotState,
    ball: &mut BallState,
    config: &SimConfig,
) -> bool {
    let Some(vdir) = ball.velocity.normalized() else {
        return false;
    };
    let body = defender.body(&config.robot);
    let p = body.to_local(ball.position);
    let v = ball.velocity.rotate(-defender.pose.heading());
    let local_vdir = vdir.rotate(-defender.pose.heading());

    let (contact, normal) = if body.contains(ball.position) {
        // Already inside: back out along the incoming path.
        let (back, normal) = body.local_exit(p, -local_vdir);
        (p - local_vdir * back, normal)
    } else {
        match body.local_segment_entry(p, v * config.dt) {
            Some((t, normal)) => (p + v * (t * config.dt), normal),
            None => return false,
        }
    };
    let vn = v.dot(normal);
    if vn >= 0.0 {
        return false;
    }
    let reflected = v - normal * ((1.0 + config.defender_restitution) * vn);
    ball.position = body.to_global(contact + normal * CONTACT_CLEARANCE);
    ball.velocity = reflected.rotate(defender.pose.heading());
    true
}

/// One explicit Euler step: advance by the current velocity, then reduce the
/// speed by `deceleration · dt`, stopping at zero.
pub fn integrate_ball(ball: &mut BallState, deceleration: f64, dt: f64) {
    let speed = ball.speed();
    if speed == 0.0 {
        return;
    }
    ball.position += ball.velocity * dt;
    let next = speed - deceleration * dt;
    ball.velocity = if next > 0.0 {
        ball.velocity * (next / speed)
    } else {
        Vec2::ZERO
    };
}

/// Advances the world by one step. Pure apart from the world's own generator.
pub fn step_world(
    state: &mut WorldState,
    actions: &[Action],
    config: &SimConfig,
) -> Result<StepEvents, DynamicsError> {
    let n = state.num_agents;
    if actions.len() != n {
        return Err(DynamicsError::ActionCount {
            expected: n,
            got: actions.len(),
        });
    }
    let mut events = StepEvents {
        kicks: vec![false; n],
        pushes: vec![false; n],
        ..StepEvents::default()
    };
    let WorldState {
        robots, ball, rng, ..
    } = state;
    for (i, action) in actions.iter().enumerate() {
        let mut robot = apply_action(&robots[i], action, &config.robot, &config.field, config.dt);
        events.kicks[i] = resolve_kick(&mut robot, action, ball, &config.robot);
        if !events.kicks[i] {
            events.pushes[i] = resolve_push(&robot, ball, config, rng);
        }
        robots[i] = robot;
    }
    for defender in &robots[n..] {
        events.defender_contact |= resolve_defender_contact(defender, ball, config);
    }
    integrate_ball(ball, config.ball_deceleration, config.dt);
    state.step += 1;

    let field = &config.field;
    events.goal_scored = in_goal(field, state.ball.position, true);
    // Conceding through the own goal also ends play as a failure.
    events.out_of_bounds = !events.goal_scored
        && (out_of_bounds(field, state.ball.position)
            || in_goal(field, state.ball.position, false));
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PresetName;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn cfg() -> SimConfig {
        let mut c = PresetName::EvalRealistic.config();
        c.ball_contact_noise = false;
        c
    }

    fn act(forward: f32, lateral: f32, angular: f32, kick: f32, stand: f32) -> Action {
        Action {
            forward,
            lateral,
            angular,
            kick,
            stand,
        }
    }

    fn robot(x: f64, y: f64, h: f64) -> RobotState {
        RobotState::at(Pose2D::new(Vec2::new(x, y), h))
    }

    #[test]
    fn straight_line_kinematics() {
        let c = cfg();
        let r = apply_action(
            &robot(0.0, 0.0, 0.0),
            &act(1.0, 0.0, 0.0, -1.0, -1.0),
            &c.robot,
            &c.field,
            0.1,
        );
        assert!((r.pose.position.x - 0.02).abs() < 1e-15);
        assert_eq!(r.pose.position.y, 0.0);
        assert_eq!(r.pose.heading(), 0.0);
        assert!((r.last_displacement.x - 0.02).abs() < 1e-15);
    }

    #[test]
    fn stand_overrides_motion() {
        let c = cfg();
        let r0 = robot(0.0, 0.0, 0.0);
        let r = apply_action(&r0, &act(1.0, 1.0, 1.0, -1.0, 1.0), &c.robot, &c.field, 0.1);
        assert_eq!(r.pose, r0.pose);
        assert!(r.standing);
        assert_eq!(r.last_displacement, Vec2::ZERO);
    }

    #[test]
    fn kick_overrides_stand() {
        let c = cfg();
        let r = apply_action(
            &robot(0.0, 0.0, 0.0),
            &act(1.0, 0.0, 0.0, 1.0, 1.0),
            &c.robot,
            &c.field,
            0.1,
        );
        assert!(!r.standing);
        assert!(r.pose.position.x > 0.0);
    }

    #[test]
    fn frozen_while_kicking() {
        let c = cfg();
        let mut r0 = robot(0.0, 0.0, 0.0);
        r0.kick_timer = 0.5;
        let r = apply_action(&r0, &act(1.0, 1.0, 1.0, 1.0, -1.0), &c.robot, &c.field, 0.1);
        assert_eq!(r.pose, r0.pose);
        assert!((r.kick_timer - 0.4).abs() < 1e-12);
        let mut r1 = robot(0.0, 0.0, 0.0);
        r1.kick_timer = 0.05;
        let r = apply_action(&r1, &act(1.0, 1.0, 1.0, 1.0, -1.0), &c.robot, &c.field, 0.1);
        assert_eq!(r.kick_timer, 0.0);
    }

    #[test]
    fn out_of_range_actions_are_clamped() {
        let c = cfg();
        let r = apply_action(
            &robot(0.0, 0.0, 0.0),
            &act(5.0, 0.0, 0.0, 0.0, 0.0),
            &c.robot,
            &c.field,
            0.1,
        );
        assert!((r.pose.position.x - 0.02).abs() < 1e-15);
    }

    #[test]
    fn position_clamped_to_field() {
        let c = cfg();
        let r = apply_action(
            &robot(4.49, 2.99, PI / 4.0),
            &act(1.0, 0.0, 0.0, 0.0, -1.0),
            &c.robot,
            &c.field,
            0.1,
        );
        assert_eq!(r.pose.position, Vec2::new(4.5, 3.0));
    }

    #[test]
    fn kick_along_heading() {
        let c = cfg();
        let mut r = robot(0.0, 0.0, 0.0);
        let mut ball = BallState::at_rest(Vec2::new(0.25, 0.0));
        assert!(resolve_kick(
            &mut r,
            &act(0.0, 0.0, 0.0, 0.9, 0.0),
            &mut ball,
            &c.robot
        ));
        assert_eq!(ball.velocity, Vec2::new(2.5, 0.0));
        assert_eq!(r.kick_timer, c.robot.kick_duration);
    }

    #[test]
    fn kick_out_of_range_or_busy() {
        let c = cfg();
        let mut r = robot(0.0, 0.0, 0.0);
        let mut ball = BallState::at_rest(Vec2::new(2.0, 0.0));
        assert!(!resolve_kick(
            &mut r,
            &act(0.0, 0.0, 0.0, 0.9, 0.0),
            &mut ball,
            &c.robot
        ));
        assert_eq!(ball.velocity, Vec2::ZERO);
        let mut busy = robot(0.0, 0.0, 0.0);
        busy.kick_timer = 0.3;
        let mut ball = BallState::at_rest(Vec2::new(0.25, 0.0));
        assert!(!resolve_kick(
            &mut busy,
            &act(0.0, 0.0, 0.0, 0.9, 0.0),
            &mut ball,
            &c.robot
        ));
        assert_eq!(ball.velocity, Vec2::ZERO);
        assert_eq!(busy.kick_timer, 0.3);
    }

    #[test]
    fn noiseless_push_along_motion() {
        let c = cfg();
        let mut r = robot(0.0, 0.0, 0.0);
        r.last_displacement = Vec2::new(0.02, 0.0);
        let mut ball = BallState::at_rest(Vec2::new(0.1, 0.0));
        let mut rng = SimRng::seed_from_u64(0);
        assert!(resolve_push(&r, &mut ball, &c, &mut rng));
        assert_eq!(ball.velocity, Vec2::new(0.5, 0.0));
        assert!(ball.position.x > 0.15 && ball.position.x < 0.15 + 1e-5);
        assert!(!r.body(&c.robot).contains(ball.position));
    }

    #[test]
    fn stationary_robot_does_not_push() {
        let c = cfg();
        let r = robot(0.0, 0.0, 0.0);
        let mut ball = BallState::at_rest(Vec2::new(0.1, 0.0));
        let before = ball;
        let mut rng = SimRng::seed_from_u64(0);
        assert!(!resolve_push(&r, &mut ball, &c, &mut rng));
        assert_eq!(ball, before);
    }

    #[test]
    fn noisy_push_stays_within_bounds() {
        let mut c = cfg();
        c.ball_contact_noise = true;
        let mut rng = SimRng::seed_from_u64(3);
        let mut r = robot(0.0, 0.0, 0.0);
        r.last_displacement = Vec2::new(0.02, 0.0);
        for _ in 0..1000 {
            let mut ball = BallState::at_rest(Vec2::new(0.1, 0.05));
            assert!(resolve_push(&r, &mut ball, &c, &mut rng));
            assert!(ball.velocity.angle().abs() <= 0.4 + 1e-12);
            let s = ball.speed();
            assert!((0.35 - 1e-12..=0.65 + 1e-12).contains(&s), "{s}");
        }
    }

    /// Brute-force reflection: decompose against the face normal explicitly.
    fn reflect_oracle(v: Vec2, n: Vec2, e: f64) -> Vec2 {
        let vn = v.x * n.x + v.y * n.y;
        let normal = Vec2::new(n.x * vn, n.y * vn);
        let tangential = Vec2::new(v.x - normal.x, v.y - normal.y);
        Vec2::new(tangential.x - e * normal.x, tangential.y - e * normal.y)
    }

    #[test]
    fn defender_reflects_head_on() {
        let c = cfg();
        let d = robot(0.0, 0.0, 0.0);
        let mut ball = BallState {
            position: Vec2::new(-0.2, 0.0),
            velocity: Vec2::new(1.0, 0.0),
        };
        assert!(resolve_defender_contact(&d, &mut ball, &c));
        assert!((ball.velocity - Vec2::new(-0.5, 0.0)).norm() < 1e-12);
        assert!(ball.position.x <= -0.15);
    }

    #[test]
    fn defender_preserves_tangential_component() {
        let c = cfg();
        let d = robot(0.0, 0.0, 0.0);
        let mut ball = BallState {
            position: Vec2::new(-0.2, 0.0),
            velocity: Vec2::new(0.6, 0.8),
        };
        assert!(resolve_defender_contact(&d, &mut ball, &c));
        let want = reflect_oracle(Vec2::new(0.6, 0.8), Vec2::new(-1.0, 0.0), 0.5);
        assert!((want - Vec2::new(-0.3, 0.8)).norm() < 1e-12);
        assert!((ball.velocity - want).norm() < 1e-12);
    }

    #[test]
    fn defender_reflection_in_rotated_frame_matches_oracle() {
        let c = cfg();
        let h = 0.7;
        let d = robot(1.0, -1.0, h);
        let n = Vec2::from_angle(h + PI);
        let v = Vec2::new(0.9, 0.3).rotate(h);
        let mut ball = BallState {
            position: d.pose.position + n * 0.16,
            velocity: v,
        };
        assert!(resolve_defender_contact(&d, &mut ball, &c));
        assert!((ball.velocity - reflect_oracle(v, n, 0.5)).norm() < 1e-12);
        assert!(!d.body(&c.robot).contains(ball.position));
    }

    #[test]
    fn stationary_ball_in_defender_untouched() {
        let c = cfg();
        let d = robot(0.0, 0.0, 0.0);
        let mut ball = BallState::at_rest(Vec2::new(0.05, 0.0));
        assert!(!resolve_defender_contact(&d, &mut ball, &c));
        assert_eq!(ball, BallState::at_rest(Vec2::new(0.05, 0.0)));
    }

    #[test]
    fn ball_inside_defender_backs_out_through_entry_face() {
        let c = cfg();
        let d = robot(0.0, 0.0, 0.0);
        let mut ball = BallState {
            position: Vec2::new(-0.12, 0.0),
            velocity: Vec2::new(1.0, 0.0),
        };
        assert!(resolve_defender_contact(&d, &mut ball, &c));
        assert!(ball.position.x < -0.15);
        assert!((ball.velocity - Vec2::new(-0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn euler_ball_step() {
        let mut ball = BallState {
            position: Vec2::ZERO,
            velocity: Vec2::new(1.0, 0.0),
        };
        integrate_ball(&mut ball, 0.8, 0.1);
        assert!((ball.velocity.x - 0.92).abs() < 1e-12);
        assert!((ball.position.x - 0.1).abs() < 1e-12);
        let mut slow = BallState {
            position: Vec2::ZERO,
            velocity: Vec2::new(0.05, 0.0),
        };
        integrate_ball(&mut slow, 0.8, 0.1);
        assert_eq!(slow.velocity, Vec2::ZERO);
    }

    #[test]
    fn kick_roll_distance_matches_closed_form() {
        let mut ball = BallState {
            position: Vec2::ZERO,
            velocity: Vec2::new(2.5, 0.0),
        };
        while ball.speed() > 0.0 {
            integrate_ball(&mut ball, 0.8, 0.1);
        }
        let closed: f64 = 2.5 * 2.5 / (2.0 * 0.8);
        assert!((closed - 3.90625).abs() < 1e-12);
        assert!((ball.position.x - closed).abs() <= 2.5 * 0.1);
    }

    fn world(c: &SimConfig, robots: Vec<RobotState>, agents: usize, ball: BallState) -> WorldState {
        WorldState {
            robots,
            num_agents: agents,
            ball,
            step: 0,
            rng: SimRng::seed_from_u64(c.seed),
            finished: false,
        }
    }

    #[test]
    fn zero_actions_fixed_point() {
        let c = cfg();
        let mut w = world(
            &c,
            vec![robot(-1.0, 0.0, 0.0), robot(1.0, 1.0, 0.0)],
            2,
            BallState::at_rest(Vec2::ZERO),
        );
        let before = w.clone();
        let ev = step_world(&mut w, &[Action::default(); 2], &c).unwrap();
        assert!(!ev.any_contact() && !ev.goal_scored && !ev.out_of_bounds);
        assert_eq!(w.robots, before.robots);
        assert_eq!(w.ball, before.ball);
        assert_eq!(w.step, 1);
    }

    #[test]
    fn agents_pass_through_each_other() {
        let mut c = PresetName::FullMarl.config();
        c.ball_contact_noise = false;
        let mut w = world(
            &c,
            vec![robot(-0.1, 0.0, 0.0), robot(0.1, 0.0, PI)],
            2,
            BallState::at_rest(Vec2::new(0.0, 2.5)),
        );
        let a = act(1.0, 0.0, 0.0, -1.0, -1.0);
        for _ in 0..10 {
            step_world(&mut w, &[a, a], &c).unwrap();
        }
        assert!((w.robots[0].pose.position.x - 0.1).abs() < 1e-12);
        assert!((w.robots[1].pose.position.x + 0.1).abs() < 1e-12);
    }

    #[test]
    fn action_count_checked() {
        let c = cfg();
        let mut w = world(&c, vec![robot(0.0, 0.0, 0.0)], 1, BallState::default());
        assert_eq!(
            step_world(&mut w, &[Action::default(); 2], &c),
            Err(DynamicsError::ActionCount {
                expected: 1,
                got: 2
            })
        );
    }

    #[test]
    fn kick_over_sideline_is_out_of_bounds() {
        let c = cfg();
        let mut w = world(
            &c,
            vec![robot(0.0, 2.8, PI / 2.0)],
            1,
            BallState::at_rest(Vec2::new(0.0, 2.95)),
        );
        let kick = act(0.0, 0.0, 0.0, 1.0, -1.0);
        let ev = step_world(&mut w, &[kick], &c).unwrap();
        assert!(ev.kicks[0]);
        assert!(ev.out_of_bounds && !ev.goal_scored);
    }

    #[test]
    fn own_goal_ends_as_out_of_bounds() {
        let c = cfg();
        let mut w = world(
            &c,
            vec![robot(-4.3, 0.0, PI)],
            1,
            BallState::at_rest(Vec2::new(-4.45, 0.0)),
        );
        let ev = step_world(&mut w, &[act(0.0, 0.0, 0.0, 1.0, -1.0)], &c).unwrap();
        assert!(ev.out_of_bounds && !ev.goal_scored);
    }

    #[test]
    fn zero_kick_duration_never_freezes() {
        let mut c = PresetName::FullMarl.config();
        c.ball_contact_noise = false;
        let mut w = world(
            &c,
            vec![robot(0.0, 0.0, 0.0)],
            1,
            BallState::at_rest(Vec2::new(0.9, 0.0)),
        );
        let ev = step_world(&mut w, &[act(0.0, 0.0, 0.0, 1.0, -1.0)], &c).unwrap();
        assert!(ev.kicks[0]);
        assert_eq!(w.robots[0].kick_timer, 0.0);
    }
}
