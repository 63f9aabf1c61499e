//! Simulator configuration and the named ablation presets.
//!
//! Every ablation is a single-field edit of [`PresetName::FullMarl`]; see
//! [`SimConfig::semantic_diff`] for the grouping of raw fields into the
//! named quantities (displacement, agent size, goal size, ...).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::FieldSpec;

/// Version of the on-disk config/scenario file schema.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {field} {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("unknown preset {0:?}; valid presets: {valid}", valid = PresetName::valid_names())]
    UnknownPreset(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: unsupported schema_version {found} (expected {expected})")]
    SchemaVersion {
        path: String,
        found: u32,
        expected: u32,
    },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub body_length: f64,
    pub body_width: f64,
    pub max_forward_speed: f64,
    pub max_lateral_speed: f64,
    pub max_angular_speed: f64,
    pub kick_speed: f64,
    /// Maximum ball distance from the robot centre at which a kick connects.
    pub kick_range: f64,
    pub kick_duration: f64,
    pub push_speed: f64,
}

impl RobotSpec {
    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.body_length.hypot(self.body_width)
    }
}

/// Shared reward coefficients. The reward is
/// `goal·[scored] + out_of_bounds·[out] − time_penalty + shaping·(Φ' − Φ)`
/// with `Φ = −dist(ball, attacked goal) / field length`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub goal: f64,
    pub out_of_bounds: f64,
    pub time_penalty: f64,
    pub shaping: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            goal: 1.0,
            out_of_bounds: -0.5,
            time_penalty: 0.001,
            shaping: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub field: FieldSpec,
    pub robot: RobotSpec,
    pub dt: f64,
    pub episode_timeout: f64,
    pub ball_deceleration: f64,
    pub ball_contact_noise: bool,
    pub contact_noise_angle: f64,
    pub contact_noise_speed_frac: f64,
    pub observation_noise: bool,
    pub observation_noise_std: f64,
    pub defender_restitution: f64,
    pub num_agents: usize,
    /// Upper bound on defenders per episode; also the number of defender
    /// slots in the observation vector.
    pub num_defenders: usize,
    pub seed: u64,
    #[serde(default)]
    pub reward: RewardConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        PresetName::FullMarl.config()
    }
}

const REALISTIC_BODY: f64 = 0.30;
const LARGE_BODY: f64 = 4.0 * REALISTIC_BODY;
const REALISTIC_KICK_RANGE: f64 = 0.30;
const LARGE_KICK_RANGE: f64 = 4.0 * REALISTIC_KICK_RANGE;
const FULL_GOAL_WIDTH: f64 = 1.5;
const REAL_KICK_DURATION: f64 = 1.0;

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let f = &self.field;
        let r = &self.robot;
        let finite = [
            f.length,
            f.width,
            f.goal_width,
            f.goal_depth,
            r.body_length,
            r.body_width,
            r.max_forward_speed,
            r.max_lateral_speed,
            r.max_angular_speed,
            r.kick_speed,
            r.kick_range,
            r.kick_duration,
            r.push_speed,
            self.dt,
            self.episode_timeout,
            self.ball_deceleration,
            self.contact_noise_angle,
            self.contact_noise_speed_frac,
            self.observation_noise_std,
            self.defender_restitution,
            self.reward.goal,
            self.reward.out_of_bounds,
            self.reward.time_penalty,
            self.reward.shaping,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid("config", "contains a non-finite number"));
        }
        if f.length <= 0.0 || f.width <= 0.0 {
            return Err(invalid("field", "length and width must be positive"));
        }
        if !(f.goal_width > 0.0 && f.goal_width < f.width) {
            return Err(invalid("field.goal_width", "must lie in (0, width)"));
        }
        if f.goal_depth < 0.0 {
            return Err(invalid("field.goal_depth", "must be non-negative"));
        }
        let positive = [
            ("robot.body_length", r.body_length),
            ("robot.body_width", r.body_width),
            ("robot.max_forward_speed", r.max_forward_speed),
            ("robot.max_lateral_speed", r.max_lateral_speed),
            ("robot.max_angular_speed", r.max_angular_speed),
            ("robot.kick_speed", r.kick_speed),
            ("robot.kick_range", r.kick_range),
            ("robot.push_speed", r.push_speed),
            ("dt", self.dt),
            ("episode_timeout", self.episode_timeout),
            ("ball_deceleration", self.ball_deceleration),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if r.kick_duration < 0.0 {
            return Err(invalid("robot.kick_duration", "must be >= 0"));
        }
        if r.kick_range < r.half_diagonal() {
            return Err(invalid(
                "robot.kick_range",
                format!(
                    "must be at least half the body diagonal ({:.4} m), got {}",
                    r.half_diagonal(),
                    r.kick_range
                ),
            ));
        }
        let steps = self.episode_timeout / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(invalid(
                "episode_timeout",
                "must be an integer multiple of dt",
            ));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.contact_noise_angle) {
            return Err(invalid("contact_noise_angle", "must lie in [0, pi/2]"));
        }
        if !(0.0..1.0).contains(&self.contact_noise_speed_frac) {
            return Err(invalid("contact_noise_speed_frac", "must lie in [0, 1)"));
        }
        if self.observation_noise_std < 0.0 {
            return Err(invalid("observation_noise_std", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.defender_restitution) {
            return Err(invalid("defender_restitution", "must lie in [0, 1]"));
        }
        if self.num_agents == 0 {
            return Err(invalid("num_agents", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps in a full-length episode.
    pub fn timeout_steps(&self) -> u32 {
        (self.episode_timeout / self.dt).round() as u32
    }

    /// Named quantities in which `self` differs from `other`.
    pub fn semantic_diff(&self, other: &SimConfig) -> Vec<&'static str> {
        let (a, b) = (&self.robot, &other.robot);
        let checks = [
            (
                "translational_displacement",
                a.max_forward_speed != b.max_forward_speed
                    || a.max_lateral_speed != b.max_lateral_speed,
            ),
            (
                "angular_displacement",
                a.max_angular_speed != b.max_angular_speed,
            ),
            (
                "agent_size",
                a.body_length != b.body_length
                    || a.body_width != b.body_width
                    || a.kick_range != b.kick_range,
            ),
            ("goal_size", self.field.goal_width != other.field.goal_width),
            ("kick_duration", a.kick_duration != b.kick_duration),
            (
                "ball_contact_noise",
                self.ball_contact_noise != other.ball_contact_noise,
            ),
            (
                "observation_noise",
                self.observation_noise != other.observation_noise,
            ),
            (
                "physics",
                a.kick_speed != b.kick_speed
                    || a.push_speed != b.push_speed
                    || self.field.length != other.field.length
                    || self.field.width != other.field.width
                    || self.field.goal_depth != other.field.goal_depth
                    || self.dt != other.dt
                    || self.episode_timeout != other.episode_timeout
                    || self.ball_deceleration != other.ball_deceleration
                    || self.contact_noise_angle != other.contact_noise_angle
                    || self.contact_noise_speed_frac != other.contact_noise_speed_frac
                    || self.observation_noise_std != other.observation_noise_std
                    || self.defender_restitution != other.defender_restitution,
            ),
            (
                "team",
                self.num_agents != other.num_agents || self.num_defenders != other.num_defenders,
            ),
            ("seed", self.seed != other.seed),
            ("reward", self.reward != other.reward),
        ];
        checks
            .into_iter()
            .filter_map(|(name, differs)| differs.then_some(name))
            .collect()
    }

    pub fn to_toml(&self) -> String {
        let file = ConfigFile {
            schema_version: CONFIG_SCHEMA_VERSION,
            config: self.clone(),
        };
        toml::to_string_pretty(&file).expect("SimConfig always serializes")
    }

    pub fn from_toml(text: &str, path: &str) -> Result<Self, ConfigError> {
        let raw: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse {
                path: path.to_string(),
                message: e.to_string(),
            })?;
        check_schema_version(&raw, path)?;
        let file: ConfigFile =
            raw.clone()
                .try_into()
                .map_err(|e: toml::de::Error| ConfigError::Parse {
                    path: path.to_string(),
                    message: e.to_string(),
                })?;
        let reference: toml::Table = toml::Table::try_from(ConfigFile {
            schema_version: CONFIG_SCHEMA_VERSION,
            config: file.config.clone(),
        })
        .expect("SimConfig always serializes");
        if let Some(key) = first_unknown_key(&raw, &reference, "") {
            return Err(ConfigError::Parse {
                path: path.to_string(),
                message: format!("unknown key `{key}`"),
            });
        }
        file.config.validate()?;
        Ok(file.config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

pub(crate) fn check_schema_version(raw: &toml::Table, path: &str) -> Result<(), ConfigError> {
    match raw.get("schema_version") {
        None => Err(ConfigError::Parse {
            path: path.to_string(),
            message: "missing mandatory key `schema_version`".into(),
        }),
        Some(toml::Value::Integer(v)) if *v == CONFIG_SCHEMA_VERSION as i64 => Ok(()),
        Some(toml::Value::Integer(v)) => Err(ConfigError::SchemaVersion {
            path: path.to_string(),
            found: (*v).clamp(0, u32::MAX as i64) as u32,
            expected: CONFIG_SCHEMA_VERSION,
        }),
        Some(other) => Err(ConfigError::Parse {
            path: path.to_string(),
            message: format!("`schema_version` must be an integer, got {other}"),
        }),
    }
}

pub(crate) fn first_unknown_key(
    raw: &toml::Table,
    reference: &toml::Table,
    prefix: &str,
) -> Option<String> {
    for (key, value) in raw {
        let Some(expected) = reference.get(key) else {
            return Some(format!("{prefix}{key}"));
        };
        if let (toml::Value::Table(inner), toml::Value::Table(inner_ref)) = (value, expected) {
            if let Some(k) = first_unknown_key(inner, inner_ref, &format!("{prefix}{key}.")) {
                return Some(k);
            }
        }
    }
    None
}

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    schema_version: u32,
    #[serde(flatten)]
    config: SimConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    FullMarl,
    LargeDisplacement,
    SmallDisplacement,
    LargeAngleDisplacement,
    RealisticAgentSize,
    RealisticGoals,
    KickingTime,
    NoBallNoise,
    WithObservationNoise,
    EvalRealistic,
}

impl PresetName {
    pub const ALL: [PresetName; 10] = [
        PresetName::FullMarl,
        PresetName::LargeDisplacement,
        PresetName::SmallDisplacement,
        PresetName::LargeAngleDisplacement,
        PresetName::RealisticAgentSize,
        PresetName::RealisticGoals,
        PresetName::KickingTime,
        PresetName::NoBallNoise,
        PresetName::WithObservationNoise,
        PresetName::EvalRealistic,
    ];

    /// The nine training presets, in table column order.
    pub const TRAINING: [PresetName; 9] = [
        PresetName::FullMarl,
        PresetName::LargeDisplacement,
        PresetName::SmallDisplacement,
        PresetName::LargeAngleDisplacement,
        PresetName::RealisticAgentSize,
        PresetName::RealisticGoals,
        PresetName::KickingTime,
        PresetName::NoBallNoise,
        PresetName::WithObservationNoise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::FullMarl => "full_marl",
            PresetName::LargeDisplacement => "large_displacement",
            PresetName::SmallDisplacement => "small_displacement",
            PresetName::LargeAngleDisplacement => "large_angle_displacement",
            PresetName::RealisticAgentSize => "realistic_agent_size",
            PresetName::RealisticGoals => "realistic_goals",
            PresetName::KickingTime => "kicking_time",
            PresetName::NoBallNoise => "no_ball_noise",
            PresetName::WithObservationNoise => "with_observation_noise",
            PresetName::EvalRealistic => "eval_realistic",
        }
    }

    /// Column header used in result tables.
    pub fn display_name(self) -> &'static str {
        match self {
            PresetName::FullMarl => "Full MARL (F)",
            PresetName::LargeDisplacement => "Large Displacement (E)",
            PresetName::SmallDisplacement => "Small Displacement (E)",
            PresetName::LargeAngleDisplacement => "Large Angle Displacement (E)",
            PresetName::RealisticAgentSize => "Realistic Agent Size (T)",
            PresetName::RealisticGoals => "Realistic Goals (T)",
            PresetName::KickingTime => "Kicking Time (T)",
            PresetName::NoBallNoise => "No Ball Noise (N)",
            PresetName::WithObservationNoise => "With Observation Noise (N)",
            PresetName::EvalRealistic => "Eval Realistic",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(|p| p.as_str()).join(", ")
    }

    pub fn config(self) -> SimConfig {
        let mut c = full_marl();
        match self {
            PresetName::FullMarl => {}
            PresetName::LargeDisplacement => {
                c.robot.max_forward_speed *= 2.0;
                c.robot.max_lateral_speed *= 2.0;
            }
            PresetName::SmallDisplacement => {
                c.robot.max_forward_speed *= 0.5;
                c.robot.max_lateral_speed *= 0.5;
            }
            PresetName::LargeAngleDisplacement => c.robot.max_angular_speed *= 2.0,
            PresetName::RealisticAgentSize => set_realistic_size(&mut c),
            PresetName::RealisticGoals => c.field.goal_width = FULL_GOAL_WIDTH,
            PresetName::KickingTime => c.robot.kick_duration = REAL_KICK_DURATION,
            PresetName::NoBallNoise => c.ball_contact_noise = false,
            PresetName::WithObservationNoise => c.observation_noise = true,
            PresetName::EvalRealistic => {
                set_realistic_size(&mut c);
                c.field.goal_width = FULL_GOAL_WIDTH;
                c.robot.kick_duration = REAL_KICK_DURATION;
            }
        }
        c
    }
}

fn set_realistic_size(c: &mut SimConfig) {
    c.robot.body_length = REALISTIC_BODY;
    c.robot.body_width = REALISTIC_BODY;
    c.robot.kick_range = REALISTIC_KICK_RANGE;
}

fn full_marl() -> SimConfig {
    SimConfig {
        field: FieldSpec {
            length: 9.0,
            width: 6.0,
            goal_width: 0.5 * FULL_GOAL_WIDTH,
            goal_depth: 0.5,
        },
        robot: RobotSpec {
            body_length: LARGE_BODY,
            body_width: LARGE_BODY,
            max_forward_speed: 0.20,
            max_lateral_speed: 0.12,
            max_angular_speed: 1.0,
            kick_speed: 2.5,
            kick_range: LARGE_KICK_RANGE,
            kick_duration: 0.0,
            push_speed: 0.5,
        },
        dt: 0.1,
        episode_timeout: 60.0,
        ball_deceleration: 0.8,
        ball_contact_noise: true,
        contact_noise_angle: 0.4,
        contact_noise_speed_frac: 0.3,
        observation_noise: false,
        observation_noise_std: 0.1,
        defender_restitution: 0.5,
        num_agents: 2,
        num_defenders: 1,
        seed: 0,
        reward: RewardConfig::default(),
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ConfigError::UnknownPreset(s.to_string()))
    }
}

/// A preset name paired with its configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigPreset {
    pub name: PresetName,
    pub config: SimConfig,
}

impl ConfigPreset {
    pub fn new(name: PresetName) -> Self {
        Self {
            name,
            config: name.config(),
        }
    }

    pub fn all() -> Vec<ConfigPreset> {
        PresetName::ALL.into_iter().map(ConfigPreset::new).collect()
    }
}
