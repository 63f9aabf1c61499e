//! Throughput measurement with uniformly random actions.
//!
//! Worlds are split across workers; each world owns its action generator, so
//! the final states do not depend on the worker count.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::batch::{mix_seed, Executor};
use crate::config::SimConfig;
use crate::dynamics::WorldState;
use crate::env::{env_step_into, reset, Action, EnvError, ObsLayout, ACTION_DIM};
use crate::scenario::ScenarioSpec;
use crate::SimRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub worlds: usize,
    pub steps_per_world: u64,
    pub workers: usize,
    pub total_steps: u64,
    pub episodes: u64,
    pub seconds: f64,
    pub steps_per_sec: f64,
    /// FNV-1a over the bit patterns of every final world state.
    pub digest: u64,
}

struct BenchWorld {
    state: WorldState,
    actions_rng: SimRng,
    episodes: u64,
    seed: u64,
}

fn fnv(hash: &mut u64, bits: u64) {
    for b in bits.to_le_bytes() {
        *hash ^= b as u64;
        *hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
}

/// Order-sensitive digest of world states, for equivalence checks.
pub fn state_digest<'a>(worlds: impl IntoIterator<Item = &'a WorldState>) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325;
    for w in worlds {
        fnv(&mut h, w.step as u64);
        for r in &w.robots {
            for v in [
                r.pose.position.x,
                r.pose.position.y,
                r.pose.heading(),
                r.kick_timer,
            ] {
                fnv(&mut h, v.to_bits());
            }
        }
        for v in [
            w.ball.position.x,
            w.ball.position.y,
            w.ball.velocity.x,
            w.ball.velocity.y,
        ] {
            fnv(&mut h, v.to_bits());
        }
    }
    h
}

/// Steps `worlds` independent random-action worlds for `steps_per_world`
/// steps each, resetting on episode end. Returns the timing report and the
/// final world states.
pub fn run_bench(
    config: &SimConfig,
    scenario: &ScenarioSpec,
    worlds: usize,
    steps_per_world: u64,
    workers: usize,
    seed: u64,
) -> Result<(BenchReport, Vec<WorldState>), EnvError> {
    let executor = Executor::new(workers)?;
    let layout = ObsLayout::for_config(config);
    let mut setup = Vec::with_capacity(worlds);
    for i in 0..worlds {
        let world_seed = mix_seed(seed, i as u64);
        let (state, _) = reset(scenario, config, mix_seed(world_seed, 0))?;
        setup.push(BenchWorld {
            state,
            actions_rng: SimRng::seed_from_u64(world_seed ^ 0x5eed_ac71_0000_0000),
            episodes: 0,
            seed: world_seed,
        });
    }
    let start = Instant::now();
    let results = executor.map(&mut setup, |_, w| -> Result<(), EnvError> {
        let mut obs = vec![0.0f32; layout.len() * config.num_agents];
        let mut actions = vec![Action::default(); config.num_agents];
        for _ in 0..steps_per_world {
            for a in actions.iter_mut() {
                let mut raw = [0.0f32; ACTION_DIM];
                for v in raw.iter_mut() {
                    *v = w.actions_rng.gen_range(-1.0..=1.0);
                }
                *a = Action::from_array(raw);
            }
            let s = env_step_into(&mut w.state, &actions, config, &mut obs)?;
            if s.terminated || s.truncated {
                w.episodes += 1;
                w.state = reset(scenario, config, mix_seed(w.seed, w.episodes))?.0;
            }
        }
        std::hint::black_box(&obs);
        Ok(())
    });
    let elapsed: Duration = start.elapsed();
    results.into_iter().collect::<Result<Vec<()>, _>>()?;
    let total_steps = worlds as u64 * steps_per_world;
    let seconds = elapsed.as_secs_f64();
    let episodes = setup.iter().map(|w| w.episodes).sum();
    let states: Vec<WorldState> = setup.into_iter().map(|w| w.state).collect();
    let report = BenchReport {
        worlds,
        steps_per_world,
        workers: executor.workers(),
        total_steps,
        episodes,
        seconds,
        steps_per_sec: if seconds > 0.0 {
            total_steps as f64 / seconds
        } else {
            f64::INFINITY
        },
        digest: state_digest(&states),
    };
    Ok((report, states))
}
