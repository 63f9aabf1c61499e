//! Initial configurations for evaluation (BS1–BS3, D1–D3) and the randomized
//! training start distribution.
//!
//! Fixed layouts, field frame in meters (team attacks +x, field 9 m × 6 m):
//!
//! | name | ball        | agent A           | agent B            | defender       |
//! |------|-------------|-------------------|--------------------|----------------|
//! | BS1  | (0, 0)      | (-1, 0) @ 0       | (0, -2) @ π/2      | –              |
//! | BS2  | (2, 1)      | (0.5, 1.5) @ 0    | (1, -1.5) @ 0      | –              |
//! | BS3  | (-1.5, -2)  | (-3, -1) @ 0      | (0.5, 1) @ 0       | –              |
//! | D1   | (0, 0)      | (-2.6, 0) @ 0     | (-0.5, 2) @ 0      | (-1.3, 0)      |
//! | D2   | (1, 1.8)    | (0.5, 0) @ 0      | (-1, -2) @ 0       | (2.5, 0)       |
//! | D3   | (1, 1)      | (-2, 1.5) @ 0     | (1, -1.8) @ π/2    | (1, -0.4)      |
//!
//! D1 puts the defender midway between agent A and the ball, D2 between agent A
//! and the attacked goal centre, D3 midway between agent B and the ball. All
//! layouts are overlap-free for both the realistic (0.3 m) and the enlarged
//! (1.2 m) robot footprints.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{check_schema_version, ConfigError, SimConfig, CONFIG_SCHEMA_VERSION};
use crate::geometry::{OrientedRect, Pose2D, Vec2};
use crate::SimRng;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}; valid scenarios: {valid}", valid = ScenarioName::valid_names())]
    Unknown(String),
    #[error("scenario {scenario} has {found} agents but the config expects {expected}")]
    AgentCount {
        scenario: String,
        found: usize,
        expected: usize,
    },
    #[error("scenario {scenario} has {found} defenders but the config allows at most {max}")]
    DefenderCount {
        scenario: String,
        found: usize,
        max: usize,
    },
    #[error("scenario {scenario}: {what} lies outside the field")]
    OutOfField { scenario: String, what: String },
    #[error("scenario {scenario}: robots {a} and {b} overlap at reset")]
    Overlap {
        scenario: String,
        a: usize,
        b: usize,
    },
    #[error("random_train: no overlap-free placement found after {0} attempts")]
    SamplingExhausted(usize),
    #[error(transparent)]
    File(#[from] ConfigError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    BS1,
    BS2,
    BS3,
    D1,
    D2,
    D3,
    RandomTrain,
    Custom(String),
}

impl ScenarioName {
    pub const FIXED: [ScenarioName; 6] = [
        ScenarioName::BS1,
        ScenarioName::BS2,
        ScenarioName::BS3,
        ScenarioName::D1,
        ScenarioName::D2,
        ScenarioName::D3,
    ];

    pub fn as_str(&self) -> &str {
        match self {
            ScenarioName::BS1 => "BS1",
            ScenarioName::BS2 => "BS2",
            ScenarioName::BS3 => "BS3",
            ScenarioName::D1 => "D1",
            ScenarioName::D2 => "D2",
            ScenarioName::D3 => "D3",
            ScenarioName::RandomTrain => "random_train",
            ScenarioName::Custom(name) => name,
        }
    }

    /// Table row label, e.g. `BS 1`.
    pub fn row_label(&self) -> String {
        match self {
            ScenarioName::BS1 | ScenarioName::BS2 | ScenarioName::BS3 => {
                format!("BS {}", &self.as_str()[2..])
            }
            ScenarioName::D1 | ScenarioName::D2 | ScenarioName::D3 => {
                format!("D {}", &self.as_str()[1..])
            }
            other => other.as_str().to_string(),
        }
    }

    pub fn valid_names() -> String {
        let mut names: Vec<&str> = Self::FIXED.iter().map(|n| n.as_str()).collect();
        names.push("random_train");
        names.join(", ")
    }

    /// Parses a built-in scenario name; custom names are rejected.
    pub fn parse_builtin(s: &str) -> Result<Self, ScenarioError> {
        match s.parse::<ScenarioName>() {
            Ok(ScenarioName::Custom(_)) | Err(_) => Err(ScenarioError::Unknown(s.to_string())),
            Ok(n) => Ok(n),
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "BS1" => ScenarioName::BS1,
            "BS2" => ScenarioName::BS2,
            "BS3" => ScenarioName::BS3,
            "D1" => ScenarioName::D1,
            "D2" => ScenarioName::D2,
            "D3" => ScenarioName::D3,
            "random_train" => ScenarioName::RandomTrain,
            other => ScenarioName::Custom(other.to_string()),
        })
    }
}

impl Serialize for ScenarioName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ScenarioName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().unwrap_or_else(|never| match never {}))
    }
}

/// A named starting layout. `random_train` carries no placements; they are
/// sampled at reset by [`ScenarioSpec::instantiate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub agent_poses: Vec<Pose2D>,
    pub ball_position: Vec2,
    #[serde(default)]
    pub defender_poses: Vec<Pose2D>,
}

/// Concrete placements for one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Placement {
    pub agent_poses: Vec<Pose2D>,
    pub ball_position: Vec2,
    pub defender_poses: Vec<Pose2D>,
}

fn pose(x: f64, y: f64, heading: f64) -> Pose2D {
    Pose2D::new(Vec2::new(x, y), heading)
}

/// Field margin kept clear when sampling random training starts.
const RANDOM_MARGIN: f64 = 0.5;
const MAX_SAMPLING_ATTEMPTS: usize = 10_000;
/// Probability that a random training episode includes a defender.
pub const RANDOM_DEFENDER_PROBABILITY: f64 = 0.5;

impl ScenarioSpec {
    pub fn builtin(name: &ScenarioName) -> Result<Self, ScenarioError> {
        let (agents, ball, defenders) = match name {
            ScenarioName::BS1 => (
                vec![pose(-1.0, 0.0, 0.0), pose(0.0, -2.0, FRAC_PI_2)],
                Vec2::new(0.0, 0.0),
                vec![],
            ),
            ScenarioName::BS2 => (
                vec![pose(0.5, 1.5, 0.0), pose(1.0, -1.5, 0.0)],
                Vec2::new(2.0, 1.0),
                vec![],
            ),
            ScenarioName::BS3 => (
                vec![pose(-3.0, -1.0, 0.0), pose(0.5, 1.0, 0.0)],
                Vec2::new(-1.5, -2.0),
                vec![],
            ),
            ScenarioName::D1 => (
                vec![pose(-2.6, 0.0, 0.0), pose(-0.5, 2.0, 0.0)],
                Vec2::new(0.0, 0.0),
                vec![pose(-1.3, 0.0, 0.0)],
            ),
            ScenarioName::D2 => (
                vec![pose(0.5, 0.0, 0.0), pose(-1.0, -2.0, 0.0)],
                Vec2::new(1.0, 1.8),
                vec![pose(2.5, 0.0, 0.0)],
            ),
            ScenarioName::D3 => (
                vec![pose(-2.0, 1.5, 0.0), pose(1.0, -1.8, FRAC_PI_2)],
                Vec2::new(1.0, 1.0),
                vec![pose(1.0, -0.4, 0.0)],
            ),
            ScenarioName::RandomTrain => (vec![], Vec2::ZERO, vec![]),
            ScenarioName::Custom(n) => return Err(ScenarioError::Unknown(n.clone())),
        };
        Ok(Self {
            name: name.clone(),
            agent_poses: agents,
            ball_position: ball,
            defender_poses: defenders,
        })
    }

    pub fn by_name(name: &str) -> Result<Self, ScenarioError> {
        Self::builtin(&ScenarioName::parse_builtin(name)?)
    }

    pub fn random_train() -> Self {
        Self::builtin(&ScenarioName::RandomTrain).expect("random_train is built in")
    }

    pub fn all_fixed() -> Vec<Self> {
        ScenarioName::FIXED
            .iter()
            .map(|n| Self::builtin(n).expect("fixed scenarios are built in"))
            .collect()
    }

    pub fn is_random(&self) -> bool {
        self.name == ScenarioName::RandomTrain
    }

    /// Checks that the scenario fits `config` and its layout is legal.
    pub fn validate(&self, config: &SimConfig) -> Result<(), ScenarioError> {
        if self.is_random() {
            return Ok(());
        }
        if self.agent_poses.len() != config.num_agents {
            return Err(ScenarioError::AgentCount {
                scenario: self.name.to_string(),
                found: self.agent_poses.len(),
                expected: config.num_agents,
            });
        }
        if self.defender_poses.len() > config.num_defenders {
            return Err(ScenarioError::DefenderCount {
                scenario: self.name.to_string(),
                found: self.defender_poses.len(),
                max: config.num_defenders,
            });
        }
        self.placement().check(config, &self.name.to_string())
    }

    fn placement(&self) -> Placement {
        Placement {
            agent_poses: self.agent_poses.clone(),
            ball_position: self.ball_position,
            defender_poses: self.defender_poses.clone(),
        }
    }

    /// Produces the placements for one episode. Fixed scenarios consume no
    /// randomness; `random_train` samples uniformly with rejection.
    pub fn instantiate(
        &self,
        config: &SimConfig,
        rng: &mut SimRng,
    ) -> Result<Placement, ScenarioError> {
        self.validate(config)?;
        if !self.is_random() {
            return Ok(self.placement());
        }
        let with_defender = config.num_defenders > 0 && rng.gen_bool(RANDOM_DEFENDER_PROBABILITY);
        let hl = config.field.half_length() - RANDOM_MARGIN;
        let hw = config.field.half_width() - RANDOM_MARGIN;
        for _ in 0..MAX_SAMPLING_ATTEMPTS {
            let sample_pose = |rng: &mut SimRng| {
                pose(
                    rng.gen_range(-hl..=hl),
                    rng.gen_range(-hw..=hw),
                    rng.gen_range(-PI..=PI),
                )
            };
            let agent_poses: Vec<Pose2D> =
                (0..config.num_agents).map(|_| sample_pose(rng)).collect();
            let defender_poses: Vec<Pose2D> = if with_defender {
                vec![sample_pose(rng)]
            } else {
                vec![]
            };
            let ball_position = Vec2::new(rng.gen_range(-hl..=hl), rng.gen_range(-hw..=hw));
            let placement = Placement {
                agent_poses,
                ball_position,
                defender_poses,
            };
            if placement.check(config, "random_train").is_ok() {
                return Ok(placement);
            }
        }
        Err(ScenarioError::SamplingExhausted(MAX_SAMPLING_ATTEMPTS))
    }
}

impl Placement {
    pub fn robot_rects(&self, config: &SimConfig) -> Vec<OrientedRect> {
        self.agent_poses
            .iter()
            .chain(&self.defender_poses)
            .map(|p| OrientedRect::new(*p, config.robot.body_length, config.robot.body_width))
            .collect()
    }

    /// Every robot centre and the ball inside the field, no pair of robot
    /// rectangles overlapping, and the ball clear of every robot body.
    pub fn check(&self, config: &SimConfig, scenario: &str) -> Result<(), ScenarioError> {
        let field = &config.field;
        for (i, p) in self
            .agent_poses
            .iter()
            .chain(&self.defender_poses)
            .enumerate()
        {
            if !field.contains(p.position) {
                return Err(ScenarioError::OutOfField {
                    scenario: scenario.to_string(),
                    what: format!("robot {i}"),
                });
            }
        }
        if !field.contains(self.ball_position) {
            return Err(ScenarioError::OutOfField {
                scenario: scenario.to_string(),
                what: "ball".into(),
            });
        }
        let rects = self.robot_rects(config);
        for a in 0..rects.len() {
            for b in a + 1..rects.len() {
                if rects[a].overlaps(&rects[b]) {
                    return Err(ScenarioError::Overlap {
                        scenario: scenario.to_string(),
                        a,
                        b,
                    });
                }
            }
            if rects[a].contains(self.ball_position) {
                return Err(ScenarioError::OutOfField {
                    scenario: scenario.to_string(),
                    what: format!("ball (inside robot {a})"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    schema_version: u32,
    scenarios: Vec<ScenarioSpec>,
}

/// Serializes scenarios to the TOML scenario-file format.
pub fn scenarios_to_toml(scenarios: &[ScenarioSpec]) -> String {
    toml::to_string_pretty(&ScenarioFile {
        schema_version: CONFIG_SCHEMA_VERSION,
        scenarios: scenarios.to_vec(),
    })
    .expect("scenarios always serialize")
}

pub fn scenarios_from_toml(text: &str, path: &str) -> Result<Vec<ScenarioSpec>, ScenarioError> {
    let parse_err = |e: toml::de::Error| ConfigError::Parse {
        path: path.to_string(),
        message: e.to_string(),
    };
    let raw: toml::Table = text.parse().map_err(parse_err)?;
    check_schema_version(&raw, path)?;
    let file: ScenarioFile = raw.try_into().map_err(parse_err)?;
    Ok(file.scenarios)
}

pub fn load_scenarios(path: impl AsRef<Path>) -> Result<Vec<ScenarioSpec>, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    scenarios_from_toml(&text, &path.display().to_string())
}
