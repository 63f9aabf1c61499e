//! Contracts consumed by an external training harness: the batch reset/step
//! boundary, the policy file layout and the report format.

use soccer_sim::batch::{FlatStepBuffers, VecEnv};
use soccer_sim::env::{reset, ObsLayout, ACTION_DIM};
use soccer_sim::evaluation::{run_suite, Report, ReportColumn, SuiteOptions};
use soccer_sim::policy::{decode_policy, encode_policy, load_policy, parameter_count, MlpPolicy};
use soccer_sim::{Action, PresetName, ScenarioName, ScenarioSpec};

#[test]
fn flat_buffers_have_documented_shapes() {
    let config = PresetName::FullMarl.config();
    let (worlds, agents) = (8, config.num_agents);
    let mut env = VecEnv::new(config, ScenarioSpec::random_train(), worlds, 1, 1, true).unwrap();
    let obs_len = env.layout().len();
    assert_eq!(obs_len, 19);
    assert_eq!(env.layout().version(), "soccer-obs-v1-a2-d1");
    let mut obs = vec![0f32; worlds * agents * obs_len];
    env.reset_all_flat(&mut obs).unwrap();
    let actions = vec![0.5f32; worlds * agents * ACTION_DIM];
    let (mut r, mut te, mut tr) = (vec![0f32; worlds], vec![0u8; worlds], vec![0u8; worlds]);
    let mut kicks = vec![0u8; worlds * agents];
    env.step_flat(
        &actions,
        FlatStepBuffers {
            observations: &mut obs,
            rewards: &mut r,
            terminated: &mut te,
            truncated: &mut tr,
            terminal_observations: None,
            kicks: Some(&mut kicks),
            successes: None,
        },
    )
    .unwrap();
    assert!(r.iter().all(|v| v.is_finite()));
    let mut short = vec![0f32; 3];
    assert!(env.reset_all_flat(&mut short).is_err());
}

#[test]
fn both_agents_share_one_observation_layout() {
    let config = PresetName::FullMarl.config();
    let layout = ObsLayout::for_config(&config);
    let (_, obs) = reset(
        &ScenarioSpec::builtin(&ScenarioName::D1).unwrap(),
        &config,
        0,
    )
    .unwrap();
    assert_eq!(obs.len(), 2);
    assert!(obs.iter().all(|o| o.len() == layout.len()));
    let names: Vec<String> = layout.fields().into_iter().map(|(n, _)| n).collect();
    assert_eq!(names.len(), layout.len());
    assert_eq!(names[0], "own_x");
    assert_eq!(names.last().unwrap(), "elapsed_frac");
}

#[test]
fn policy_file_written_by_hand_loads() {
    // Byte image assembled independently of the encoder.
    let sizes = [19u32, 3, 5];
    let n = parameter_count(&[19, 3, 5]);
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"SSPF");
    bytes.extend_from_slice(&1u32.to_le_bytes());
    let layout = b"soccer-obs-v1-a2-d1";
    bytes.extend_from_slice(&(layout.len() as u32).to_le_bytes());
    bytes.extend_from_slice(layout);
    bytes.extend_from_slice(&9u32.to_le_bytes());
    bytes.extend_from_slice(b"full_marl");
    bytes.extend_from_slice(&5_000_000u64.to_le_bytes());
    bytes.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for s in sizes {
        bytes.extend_from_slice(&s.to_le_bytes());
    }
    bytes.extend_from_slice(&(n as u64).to_le_bytes());
    let params: Vec<f32> = (0..n).map(|i| ((i % 11) as f32 - 5.0) * 0.01).collect();
    for p in &params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hand.bin");
    std::fs::write(&path, &bytes).unwrap();
    let policy = load_policy(&path).unwrap();
    assert_eq!(policy.layer_sizes(), &[19, 3, 5]);
    assert_eq!(policy.parameters(), params);
    assert_eq!(policy.metadata.preset, "full_marl");
    assert_eq!(policy.metadata.training_steps, 5_000_000);
    assert_eq!(encode_policy(&policy), bytes);

    // First hidden unit reads W1 row 0 then b1[0].
    let mut obs = vec![0f32; 19];
    obs[0] = 1.0;
    let h0 = (params[0] + params[19 * 3]).tanh();
    let h1 = (params[19] + params[19 * 3 + 1]).tanh();
    let h2 = (params[38] + params[19 * 3 + 2]).tanh();
    let base = 19 * 3 + 3;
    let a0 =
        (params[base] * h0 + params[base + 1] * h1 + params[base + 2] * h2 + params[base + 15])
            .tanh();
    let got = policy.forward(&obs).unwrap().forward;
    assert!((got - a0).abs() < 1e-6, "{got} vs {a0}");
    assert!(decode_policy(&bytes[..bytes.len() - 4], "cut").is_err());
}

#[test]
fn grid_report_round_trips() {
    let config = PresetName::EvalRealistic.config();
    let scenarios = ScenarioSpec::all_fixed();
    let layout = ObsLayout::for_config(&config).version();
    let columns = ["full_marl", "no_ball_noise"]
        .iter()
        .enumerate()
        .map(|(i, preset)| {
            let p = MlpPolicy::random(vec![19, 8, 5], layout.clone(), i as u64, 0.5).unwrap();
            let suite = run_suite(&p, &scenarios, &config, 2, 0, &SuiteOptions::default()).unwrap();
            ReportColumn {
                label: preset
                    .parse::<PresetName>()
                    .unwrap()
                    .display_name()
                    .to_string(),
                summaries: suite.summaries,
            }
        })
        .collect();
    let report = Report::new("eval_realistic", 2, 0, columns);
    let back = Report::from_json(&report.to_json()).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.columns.len(), 2);
    assert!(back.columns.iter().all(|c| c.summaries.len() == 6));
    let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(value["format"], "soccer-sim-report");
    assert_eq!(value["columns"][0]["summaries"][0]["scenario"], "BS1");
    assert!(value["columns"][0]["summaries"][0]["success_rate"]["half_width"].is_number());
}

#[test]
fn zero_action_joint_step_keeps_world_still() {
    let config = PresetName::NoBallNoise.config();
    let mut env = VecEnv::new(
        config,
        ScenarioSpec::builtin(&ScenarioName::BS1).unwrap(),
        2,
        0,
        1,
        false,
    )
    .unwrap();
    let before: Vec<_> = env.worlds().map(|w| (w.robots.clone(), w.ball)).collect();
    env.step(&vec![vec![Action::default(); 2]; 2]).unwrap();
    let after: Vec<_> = env.worlds().map(|w| (w.robots.clone(), w.ball)).collect();
    for ((r0, b0), (r1, b1)) in before.iter().zip(&after) {
        assert_eq!(b0, b1);
        for (a, b) in r0.iter().zip(r1) {
            assert_eq!(a.pose, b.pose);
        }
    }
}
