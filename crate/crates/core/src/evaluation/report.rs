//! Metrics reports: rows are scenarios, columns are training presets (or any
//! other policy label), one grid for success rate and one for time to score.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::MetricsSummary;
use crate::scenario::ScenarioName;
use crate::stats::ConfidenceInterval;

pub const REPORT_FORMAT: &str = "soccer-sim-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportColumn {
    pub label: String,
    pub summaries: Vec<MetricsSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub version: u32,
    pub eval_preset: String,
    pub n_trials: usize,
    pub base_seed: u64,
    pub confidence: f64,
    pub columns: Vec<ReportColumn>,
}

impl Report {
    pub fn new(
        eval_preset: &str,
        n_trials: usize,
        base_seed: u64,
        columns: Vec<ReportColumn>,
    ) -> Self {
        Self {
            format: REPORT_FORMAT.to_string(),
            version: REPORT_VERSION,
            eval_preset: eval_preset.to_string(),
            n_trials,
            base_seed,
            confidence: super::CONFIDENCE,
            columns,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn rows(&self) -> Vec<String> {
        let mut rows: Vec<String> = Vec::new();
        for c in &self.columns {
            for s in &c.summaries {
                if !rows.contains(&s.scenario) {
                    rows.push(s.scenario.clone());
                }
            }
        }
        rows
    }

    fn cell(&self, column: &ReportColumn, row: &str, time: bool) -> String {
        match column.summaries.iter().find(|s| s.scenario == row) {
            None => "-".to_string(),
            Some(s) if time => s.time_to_score.map_or_else(|| "N/A".to_string(), format_ci),
            Some(s) => format_ci(s.success_rate),
        }
    }
}

/// `mean ± half-width` with two and one decimals, as in the published tables.
pub fn format_ci(ci: ConfidenceInterval) -> String {
    format!("{:.2} ± {:.1}", ci.mean, ci.half_width)
}

fn row_label(name: &str) -> String {
    ScenarioName::parse_builtin(name).map_or_else(|_| name.to_string(), |n| n.row_label())
}

fn grid(report: &Report, title: &str, time: bool, out: &mut String) {
    let rows = report.rows();
    let mut table: Vec<Vec<String>> = vec![std::iter::once("Scenario".to_string())
        .chain(report.columns.iter().map(|c| c.label.clone()))
        .collect()];
    for r in &rows {
        table.push(
            std::iter::once(row_label(r))
                .chain(report.columns.iter().map(|c| report.cell(c, r, time)))
                .collect(),
        );
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|i| {
            table
                .iter()
                .map(|row| row[i].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let _ = writeln!(out, "{title}");
    for (n, row) in table.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
        if n == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "|-{}-|", rule.join("-|-"));
        }
    }
}

/// Human-readable success-rate and time-to-score grids.
pub fn render_table(report: &Report) -> String {
    let pct = (report.confidence * 100.0).round();
    let mut out = String::new();
    grid(
        report,
        &format!(
            "Success rate ({pct}% CI, {} trials, evaluated under {})",
            report.n_trials, report.eval_preset
        ),
        false,
        &mut out,
    );
    out.push('\n');
    grid(
        report,
        &format!("Time to score in seconds, successful trials only ({pct}% CI)"),
        true,
        &mut out,
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(scenario: &str, rate: (f64, f64), time: Option<(f64, f64)>) -> MetricsSummary {
        MetricsSummary {
            scenario: scenario.into(),
            n_trials: 10,
            n_successes: (rate.0 * 10.0) as usize,
            success_rate: ConfidenceInterval {
                mean: rate.0,
                half_width: rate.1,
            },
            time_to_score: time.map(|(m, h)| ConfidenceInterval {
                mean: m,
                half_width: h,
            }),
            confidence: 0.95,
            mean_kicks: 0.0,
            kick_trigger_rate: 0.0,
        }
    }

    #[test]
    fn cells_use_published_rounding() {
        assert_eq!(
            format_ci(ConfidenceInterval {
                mean: 0.9,
                half_width: 0.2262
            }),
            "0.90 ± 0.2"
        );
        assert_eq!(
            format_ci(ConfidenceInterval {
                mean: 45.777,
                half_width: 8.08
            }),
            "45.78 ± 8.1"
        );
    }

    #[test]
    fn table_has_rows_per_scenario_and_na() {
        let report = Report::new(
            "eval_realistic",
            10,
            0,
            vec![
                ReportColumn {
                    label: "Full MARL (F)".into(),
                    summaries: vec![
                        summary("BS1", (0.9, 0.226), Some((45.78, 8.1))),
                        summary("D1", (0.5, 0.377), Some((40.6, 12.3))),
                    ],
                },
                ReportColumn {
                    label: "F - Large Displacement".into(),
                    summaries: vec![
                        summary("BS1", (0.7, 0.3), Some((43.1, 4.9))),
                        summary("D1", (0.0, 0.0), None),
                    ],
                },
            ],
        );
        let text = render_table(&report);
        assert!(text.contains("| BS 1 "));
        assert!(text.contains("| D 1 "));
        assert!(text.contains("N/A"));
        assert!(text.contains("0.00 ± 0.0"));
        assert_eq!(Report::from_json(&report.to_json()).unwrap(), report);
    }
}
