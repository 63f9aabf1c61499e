//! Portable feed-forward policies and deterministic inference.
//!
//! One network serves every agent; each agent feeds it its own observation.

mod file;
mod scripted;

pub use file::{
    decode_policy, encode_policy, load_policy, save_policy, PolicyFileError, POLICY_FORMAT_VERSION,
    POLICY_MAGIC,
};
pub use scripted::{ScriptedController, ZeroController};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Action, ACTION_DIM};
use crate::SimRng;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("observation has {got} values but the policy expects {expected}")]
    InputDimension { expected: usize, got: usize },
    #[error(
        "observation layout mismatch: policy was built for {policy:?} but the environment provides {environment:?}"
    )]
    LayoutMismatch { policy: String, environment: String },
    #[error("invalid policy: {0}")]
    Invalid(String),
}

/// Provenance recorded alongside the parameters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyMetadata {
    pub preset: String,
    pub training_steps: u64,
}

/// Anything that maps one agent's observation to an action.
pub trait Controller: Send + Sync {
    fn act(&self, observation: &[f32]) -> Result<Action, PolicyError>;

    /// Observation layout the controller was built for, if it records one.
    fn obs_layout_version(&self) -> Option<&str> {
        None
    }

    fn label(&self) -> String;

    /// Rejects controllers built for a different observation layout.
    fn check_layout(&self, environment: &str) -> Result<(), PolicyError> {
        match self.obs_layout_version() {
            Some(v) if v != environment => Err(PolicyError::LayoutMismatch {
                policy: v.to_string(),
                environment: environment.to_string(),
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Dense {
    n_in: usize,
    n_out: usize,
    /// `n_out × n_in`, row-major.
    weights: Vec<f32>,
    bias: Vec<f32>,
}

/// Multi-layer perceptron with tanh on every layer, including the output,
/// so each action channel lands in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpPolicy {
    layer_sizes: Vec<usize>,
    layers: Vec<Dense>,
    obs_layout_version: String,
    pub metadata: PolicyMetadata,
}

/// Number of parameters for the given layer sizes.
pub fn parameter_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpPolicy {
    /// Builds a policy from a flat layer-major parameter blob
    /// (`W₁, b₁, W₂, b₂, …`, each `W` row-major `n_out × n_in`).
    pub fn from_parameters(
        layer_sizes: Vec<usize>,
        parameters: &[f32],
        obs_layout_version: impl Into<String>,
        metadata: PolicyMetadata,
    ) -> Result<Self, PolicyError> {
        if layer_sizes.len() < 2 {
            return Err(PolicyError::Invalid(format!(
                "need at least input and output sizes, got {layer_sizes:?}"
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(PolicyError::Invalid(format!(
                "zero-width layer in {layer_sizes:?}"
            )));
        }
        let out = *layer_sizes.last().unwrap();
        if out != ACTION_DIM {
            return Err(PolicyError::Invalid(format!(
                "output size must be {ACTION_DIM}, got {out}"
            )));
        }
        let expected = parameter_count(&layer_sizes);
        if parameters.len() != expected {
            return Err(PolicyError::Invalid(format!(
                "parameter blob has {} floats, expected {expected}",
                parameters.len()
            )));
        }
        if let Some(i) = parameters.iter().position(|v| !v.is_finite()) {
            return Err(PolicyError::Invalid(format!("parameter {i} is not finite")));
        }
        let mut rest = parameters;
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let (weights, tail) = rest.split_at(n_in * n_out);
                let (bias, tail) = tail.split_at(n_out);
                rest = tail;
                Dense {
                    n_in,
                    n_out,
                    weights: weights.to_vec(),
                    bias: bias.to_vec(),
                }
            })
            .collect();
        Ok(Self {
            layer_sizes,
            layers,
            obs_layout_version: obs_layout_version.into(),
            metadata,
        })
    }

    /// All-zero parameters; every action channel evaluates to 0.
    pub fn zeros(
        layer_sizes: Vec<usize>,
        obs_layout_version: impl Into<String>,
    ) -> Result<Self, PolicyError> {
        let n = parameter_count(&layer_sizes);
        Self::from_parameters(
            layer_sizes,
            &vec![0.0; n],
            obs_layout_version,
            PolicyMetadata::default(),
        )
    }

    /// Uniform `[-scale, scale]` parameters from a seeded generator.
    pub fn random(
        layer_sizes: Vec<usize>,
        obs_layout_version: impl Into<String>,
        seed: u64,
        scale: f32,
    ) -> Result<Self, PolicyError> {
        let mut rng = SimRng::seed_from_u64(seed);
        let params: Vec<f32> = (0..parameter_count(&layer_sizes))
            .map(|_| rng.gen_range(-scale..=scale))
            .collect();
        Self::from_parameters(
            layer_sizes,
            &params,
            obs_layout_version,
            PolicyMetadata::default(),
        )
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn layout_version(&self) -> &str {
        &self.obs_layout_version
    }

    /// Flat layer-major parameter blob.
    pub fn parameters(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(parameter_count(&self.layer_sizes));
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Deterministic action: the tanh-squashed network output.
    pub fn forward(&self, obs: &[f32]) -> Result<Action, PolicyError> {
        if obs.len() != self.input_size() {
            return Err(PolicyError::InputDimension {
                expected: self.input_size(),
                got: obs.len(),
            });
        }
        let mut x = obs.to_vec();
        let mut y = Vec::new();
        for l in &self.layers {
            y.clear();
            y.extend(l.weights.chunks_exact(l.n_in).zip(&l.bias).map(|(row, b)| {
                let z: f32 = row.iter().zip(&x).map(|(w, v)| w * v).sum::<f32>() + b;
                z.tanh()
            }));
            debug_assert_eq!(y.len(), l.n_out);
            std::mem::swap(&mut x, &mut y);
        }
        Ok(Action::from_slice(&x))
    }
}

impl Controller for MlpPolicy {
    fn act(&self, observation: &[f32]) -> Result<Action, PolicyError> {
        self.forward(observation)
    }

    fn obs_layout_version(&self) -> Option<&str> {
        Some(&self.obs_layout_version)
    }

    fn label(&self) -> String {
        if self.metadata.preset.is_empty() {
            "mlp".to_string()
        } else {
            format!("mlp[{}]", self.metadata.preset)
        }
    }
}
