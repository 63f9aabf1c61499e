use soccer_sim::env::{EpisodeOutcome, FailureReason};
use soccer_sim::evaluation::{format_ci, summarize, TrialResult};
use soccer_sim::stats::{student_t_ci, student_t_quantile};

fn binary(k: usize) -> Vec<f64> {
    (0..10).map(|i| if i < k { 1.0 } else { 0.0 }).collect()
}

/// Published ten-trial success table, row-major: six scenarios by four presets.
const PUBLISHED: [&str; 24] = [
    "0.90 ± 0.2",
    "0.70 ± 0.3",
    "0.20 ± 0.3",
    "0.10 ± 0.2",
    "1.00 ± 0.0",
    "0.70 ± 0.4",
    "0.50 ± 0.4",
    "0.90 ± 0.2",
    "0.80 ± 0.3",
    "0.60 ± 0.4",
    "0.30 ± 0.4",
    "0.30 ± 0.4",
    "0.50 ± 0.4",
    "0.00 ± 0.0",
    "0.40 ± 0.4",
    "0.10 ± 0.2",
    "1.00 ± 0.0",
    "0.80 ± 0.3",
    "1.00 ± 0.0",
    "0.30 ± 0.4",
    "0.80 ± 0.3",
    "0.90 ± 0.2",
    "0.70 ± 0.4",
    "0.00 ± 0.0",
];

#[test]
fn published_success_table_cells() {
    let mut mismatched = Vec::new();
    for (i, cell) in PUBLISHED.iter().enumerate() {
        let mean: f64 = cell.split(' ').next().unwrap().parse().unwrap();
        let k = (mean * 10.0).round() as usize;
        let ours = format_ci(student_t_ci(&binary(k), 0.95).unwrap());
        if ours != *cell {
            mismatched.push((i, k, ours));
        }
    }
    // k = 3 and k = 7 share the half-width 0.3456, which rounds to 0.3; the
    // table prints 0.4 for five of those cells and 0.3 for one, so no single
    // convention reproduces all of them. Every other cell matches.
    let ks: Vec<usize> = mismatched.iter().map(|m| m.1).collect();
    assert_eq!(ks, vec![7, 3, 3, 3, 7], "{mismatched:?}");
    assert!(mismatched.iter().all(|m| m.2.ends_with("± 0.3")));
}

#[test]
fn closed_form_binary_half_widths() {
    let t = student_t_quantile(0.975, 9.0).unwrap();
    for k in 0..=10 {
        let ci = student_t_ci(&binary(k), 0.95).unwrap();
        let closed = t * ((k * (10 - k)) as f64 / 90.0).sqrt() / 10f64.sqrt();
        assert!((ci.half_width - closed).abs() <= 1e-9, "k={k}");
        assert!((ci.mean - k as f64 / 10.0).abs() < 1e-15);
    }
}

#[test]
fn time_to_score_ignores_failures() {
    let trial = |seed, t: Option<f64>| TrialResult {
        scenario: "BS2".into(),
        seed,
        outcome: EpisodeOutcome {
            success: t.is_some(),
            time_to_score: t,
            failure_reason: t.is_none().then_some(FailureReason::OutOfBounds),
        },
        step_count: 100,
        kick_count: 0,
        kick_triggers: 0,
        trace_path: None,
    };
    let trials = vec![
        trial(0, Some(20.0)),
        trial(1, None),
        trial(2, Some(30.0)),
        trial(3, None),
    ];
    let s = summarize("BS2", &trials, 2).unwrap();
    let only = student_t_ci(&[20.0, 30.0], 0.95).unwrap();
    assert_eq!(s.time_to_score, Some(only));
    assert_eq!(s.success_rate.mean, 0.5);
}
