//! Vectorized stepping over many independent worlds.
//!
//! Worlds carry their own generators, so parallel execution is
//! observationally identical to stepping them one after another.

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::dynamics::WorldState;
use crate::env::{
    env_step, env_step_into, reset, Action, EnvError, ObsLayout, Observation, StepResult,
    ACTION_DIM,
};
use crate::scenario::ScenarioSpec;

/// SplitMix64 finalizer; used to derive per-world and per-episode seeds.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs closures over worlds either inline or on a dedicated rayon pool.
pub struct Executor {
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    /// `workers <= 1` runs everything on the calling thread.
    pub fn new(workers: usize) -> Result<Self, EnvError> {
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| EnvError::Pool(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// Applies `f` to every item; the result order always matches `items`.
    pub fn map<T, R, F>(&self, items: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, &mut T) -> R + Sync + Send,
    {
        match &self.pool {
            None => items.iter_mut().enumerate().map(|(i, t)| f(i, t)).collect(),
            Some(pool) => pool.install(|| {
                items
                    .par_iter_mut()
                    .enumerate()
                    .map(|(i, t)| f(i, t))
                    .collect()
            }),
        }
    }
}

/// Steps every world with its joint action; equivalent to calling
/// [`env_step`] on each in order.
pub fn batch_step(
    worlds: &mut [WorldState],
    joint_actions: &[Vec<Action>],
    config: &SimConfig,
    executor: &Executor,
) -> Result<Vec<StepResult>, EnvError> {
    if worlds.len() != joint_actions.len() {
        return Err(EnvError::BatchLength {
            worlds: worlds.len(),
            actions: joint_actions.len(),
        });
    }
    executor
        .map(worlds, |i, w| env_step(w, &joint_actions[i], config))
        .into_iter()
        .collect()
}

/// One world's result from [`VecEnv::step`].
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStep {
    /// For a finished episode `result.observations` is the terminal observation.
    pub result: StepResult,
    /// Observations of the freshly reset episode, when auto-reset fired.
    pub reset_observations: Option<Vec<Observation>>,
}

/// Flat output buffers for [`VecEnv::step_flat`]. Observation buffers are
/// world-major then agent-major; per-agent buffers are world-major.
pub struct FlatStepBuffers<'a> {
    pub observations: &'a mut [f32],
    pub rewards: &'a mut [f32],
    pub terminated: &'a mut [u8],
    pub truncated: &'a mut [u8],
    /// Terminal observations of worlds that auto-reset this step; rows of
    /// other worlds are left untouched.
    pub terminal_observations: Option<&'a mut [f32]>,
    /// 1 where the agent's kick connected this step.
    pub kicks: Option<&'a mut [u8]>,
    /// 1 where the episode succeeded (goal) this step.
    pub successes: Option<&'a mut [u8]>,
}

struct Slot {
    state: WorldState,
    world_seed: u64,
    episode: u64,
}

/// A fixed set of worlds sharing one config and scenario, with optional
/// auto-reset. Episode `e` of world `i` is seeded with
/// `mix_seed(mix_seed(base_seed, i), e)`.
pub struct VecEnv {
    config: SimConfig,
    scenario: ScenarioSpec,
    slots: Vec<Slot>,
    executor: Executor,
    auto_reset: bool,
    layout: ObsLayout,
}

impl VecEnv {
    pub fn new(
        config: SimConfig,
        scenario: ScenarioSpec,
        num_worlds: usize,
        base_seed: u64,
        workers: usize,
        auto_reset: bool,
    ) -> Result<Self, EnvError> {
        let executor = Executor::new(workers)?;
        let layout = ObsLayout::for_config(&config);
        let slots = (0..num_worlds)
            .map(|i| {
                let world_seed = mix_seed(base_seed, i as u64);
                let (state, _) = reset(&scenario, &config, mix_seed(world_seed, 0))?;
                Ok(Slot {
                    state,
                    world_seed,
                    episode: 0,
                })
            })
            .collect::<Result<Vec<_>, EnvError>>()?;
        Ok(Self {
            config,
            scenario,
            slots,
            executor,
            auto_reset,
            layout,
        })
    }

    pub fn num_worlds(&self) -> usize {
        self.slots.len()
    }

    pub fn num_agents(&self) -> usize {
        self.config.num_agents
    }

    pub fn layout(&self) -> ObsLayout {
        self.layout
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn worlds(&self) -> impl Iterator<Item = &WorldState> {
        self.slots.iter().map(|s| &s.state)
    }

    /// Restarts every world at episode 0 and returns the initial observations.
    pub fn reset_all(&mut self) -> Result<Vec<Vec<Observation>>, EnvError> {
        let (config, scenario) = (&self.config, &self.scenario);
        self.executor
            .map(&mut self.slots, |_, slot| {
                slot.episode = 0;
                let (state, obs) = reset(scenario, config, mix_seed(slot.world_seed, 0))?;
                slot.state = state;
                Ok(obs)
            })
            .into_iter()
            .collect()
    }

    /// Flat variant of [`VecEnv::reset_all`].
    pub fn reset_all_flat(&mut self, observations: &mut [f32]) -> Result<(), EnvError> {
        let per_world = self.layout.len() * self.num_agents();
        check_len(
            "observations",
            observations.len(),
            per_world * self.num_worlds(),
        )?;
        for (obs, dst) in self
            .reset_all()?
            .iter()
            .zip(observations.chunks_exact_mut(per_world))
        {
            for (o, d) in obs.iter().zip(dst.chunks_exact_mut(self.layout.len())) {
                d.copy_from_slice(o);
            }
        }
        Ok(())
    }

    pub fn step(&mut self, joint_actions: &[Vec<Action>]) -> Result<Vec<BatchStep>, EnvError> {
        if joint_actions.len() != self.slots.len() {
            return Err(EnvError::BatchLength {
                worlds: self.slots.len(),
                actions: joint_actions.len(),
            });
        }
        let (config, scenario, auto) = (&self.config, &self.scenario, self.auto_reset);
        self.executor
            .map(&mut self.slots, |i, slot| {
                let result = env_step(&mut slot.state, &joint_actions[i], config)?;
                let reset_observations = if auto && result.done() {
                    Some(slot.restart(scenario, config)?)
                } else {
                    None
                };
                Ok(BatchStep {
                    result,
                    reset_observations,
                })
            })
            .into_iter()
            .collect()
    }

    /// Allocation-light step over flat buffers; `actions` is world-major,
    /// agent-major, [`ACTION_DIM`] floats per agent. With auto-reset the
    /// `observations` rows of finished worlds hold the new episode's start.
    pub fn step_flat(&mut self, actions: &[f32], out: FlatStepBuffers<'_>) -> Result<(), EnvError> {
        let n = self.slots.len();
        let agents = self.num_agents();
        let obs_len = self.layout.len();
        let per_world = obs_len * agents;
        check_len("actions", actions.len(), n * agents * ACTION_DIM)?;
        check_len("observations", out.observations.len(), n * per_world)?;
        check_len("rewards", out.rewards.len(), n)?;
        check_len("terminated", out.terminated.len(), n)?;
        check_len("truncated", out.truncated.len(), n)?;
        if let Some(t) = &out.terminal_observations {
            check_len("terminal_observations", t.len(), n * per_world)?;
        }
        if let Some(k) = &out.kicks {
            check_len("kicks", k.len(), n * agents)?;
        }
        if let Some(s) = &out.successes {
            check_len("successes", s.len(), n)?;
        }

        let (config, scenario, auto) = (&self.config, &self.scenario, self.auto_reset);
        let want_terminal = out.terminal_observations.is_some();
        let results = self.executor.map(&mut self.slots, |i, slot| {
            let acts: Vec<Action> = actions[i * agents * ACTION_DIM..(i + 1) * agents * ACTION_DIM]
                .chunks_exact(ACTION_DIM)
                .map(Action::from_slice)
                .collect();
            let mut obs = vec![0.0; per_world];
            let summary = env_step_into(&mut slot.state, &acts, config, &mut obs)?;
            let done = summary.terminated || summary.truncated;
            let mut terminal = None;
            if auto && done {
                if want_terminal {
                    terminal = Some(obs.clone());
                }
                let fresh = slot.restart(scenario, config)?;
                for (o, d) in fresh.iter().zip(obs.chunks_exact_mut(obs_len)) {
                    d.copy_from_slice(o);
                }
            }
            Ok::<_, EnvError>((summary, obs, terminal))
        });

        let FlatStepBuffers {
            observations,
            rewards,
            terminated,
            truncated,
            mut terminal_observations,
            mut kicks,
            mut successes,
        } = out;
        for (i, r) in results.into_iter().enumerate() {
            let (summary, obs, terminal) = r?;
            observations[i * per_world..(i + 1) * per_world].copy_from_slice(&obs);
            rewards[i] = summary.reward as f32;
            terminated[i] = summary.terminated as u8;
            truncated[i] = summary.truncated as u8;
            if let (Some(dst), Some(t)) = (terminal_observations.as_deref_mut(), terminal) {
                dst[i * per_world..(i + 1) * per_world].copy_from_slice(&t);
            }
            if let Some(k) = kicks.as_deref_mut() {
                for (a, &kicked) in summary.events.kicks.iter().enumerate() {
                    k[i * agents + a] = kicked as u8;
                }
            }
            if let Some(s) = successes.as_deref_mut() {
                s[i] = summary.events.goal_scored as u8;
            }
        }
        Ok(())
    }
}

impl Slot {
    fn restart(
        &mut self,
        scenario: &ScenarioSpec,
        config: &SimConfig,
    ) -> Result<Vec<Observation>, EnvError> {
        self.episode += 1;
        let (state, obs) = reset(scenario, config, mix_seed(self.world_seed, self.episode))?;
        self.state = state;
        Ok(obs)
    }
}

fn check_len(name: &'static str, got: usize, expected: usize) -> Result<(), EnvError> {
    if got != expected {
        return Err(EnvError::BufferLength {
            name,
            expected,
            got,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PresetName;
    use crate::scenario::ScenarioName;

    #[test]
    fn batch_of_one_is_env_step() {
        let c = PresetName::FullMarl.config();
        let s = ScenarioSpec::builtin(&ScenarioName::BS2).unwrap();
        let (w, _) = reset(&s, &c, 3).unwrap();
        let acts = vec![Action::from_array([1.0, 0.3, -0.2, -1.0, -1.0]); 2];
        let mut single = w.clone();
        let want = env_step(&mut single, &acts, &c).unwrap();
        let mut batch = vec![w];
        let got = batch_step(&mut batch, &[acts], &c, &Executor::new(1).unwrap()).unwrap();
        assert_eq!(got, vec![want]);
        assert_eq!(batch[0], single);
    }

    #[test]
    fn length_mismatch_rejected() {
        let c = PresetName::FullMarl.config();
        let s = ScenarioSpec::builtin(&ScenarioName::BS1).unwrap();
        let (w, _) = reset(&s, &c, 0).unwrap();
        let err = batch_step(&mut [w], &[], &c, &Executor::new(1).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            EnvError::BatchLength {
                worlds: 1,
                actions: 0
            }
        ));
    }

    #[test]
    fn auto_reset_emits_reset_observation() {
        let mut c = PresetName::FullMarl.config();
        c.episode_timeout = 0.3;
        let s = ScenarioSpec::builtin(&ScenarioName::BS1).unwrap();
        let mut env = VecEnv::new(c.clone(), s.clone(), 2, 9, 1, true).unwrap();
        let zero = vec![vec![Action::default(); 2]; 2];
        env.step(&zero).unwrap();
        env.step(&zero).unwrap();
        let last = env.step(&zero).unwrap();
        for (i, b) in last.iter().enumerate() {
            assert!(b.result.truncated);
            let fresh = b.reset_observations.as_ref().unwrap();
            let (_, want) = reset(&s, &c, mix_seed(mix_seed(9, i as u64), 1)).unwrap();
            assert_eq!(fresh, &want);
        }
        assert!(env.worlds().all(|w| w.step == 0 && !w.finished));
    }

    #[test]
    fn flat_step_matches_structured_step() {
        let c = PresetName::FullMarl.config();
        let s = ScenarioSpec::random_train();
        let mut a = VecEnv::new(c.clone(), s.clone(), 4, 1, 1, true).unwrap();
        let mut b = VecEnv::new(c, s, 4, 1, 1, true).unwrap();
        let l = a.layout().len();
        let acts: Vec<Vec<Action>> = (0..4)
            .map(|i| vec![Action::from_array([0.5, -0.2 * i as f32, 0.1, 1.0, -1.0]); 2])
            .collect();
        let flat_acts: Vec<f32> = acts.iter().flatten().flat_map(|a| a.to_array()).collect();
        let mut obs = vec![0.0; 4 * 2 * l];
        let mut rew = vec![0.0; 4];
        let mut term = vec![0; 4];
        let mut trunc = vec![0; 4];
        for _ in 0..50 {
            let want = a.step(&acts).unwrap();
            b.step_flat(
                &flat_acts,
                FlatStepBuffers {
                    observations: &mut obs,
                    rewards: &mut rew,
                    terminated: &mut term,
                    truncated: &mut trunc,
                    terminal_observations: None,
                    kicks: None,
                    successes: None,
                },
            )
            .unwrap();
            for (i, w) in want.iter().enumerate() {
                let o = w
                    .reset_observations
                    .as_ref()
                    .unwrap_or(&w.result.observations);
                let flat: Vec<f32> = o.iter().flatten().copied().collect();
                assert_eq!(&obs[i * 2 * l..(i + 1) * 2 * l], &flat[..]);
                assert_eq!(rew[i], w.result.reward as f32);
                assert_eq!(term[i] == 1, w.result.terminated);
            }
        }
    }
}
