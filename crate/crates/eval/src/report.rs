use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mup_agents::Condition;
use mup_core::model::Weekday;
use serde::{Deserialize, Serialize};

/// One weekday plan request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub day: Weekday,
    pub ok: bool,
    pub actions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// 1-based.
    pub trial: u32,
    pub retrieval_pct: f64,
    pub conflict_pct: f64,
    pub satisfied_rules: usize,
    pub total_rules: usize,
    pub resolved_conflicts: usize,
    pub total_conflicts: usize,
    pub instances: Vec<InstanceResult>,
}

/// Scores of one (scenario, condition) pair, averaged over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub scenario: String,
    pub condition: Condition,
    pub retrieval_pct: f64,
    pub conflict_pct: f64,
    pub instances: usize,
    pub trials: Vec<TrialResult>,
}

impl Cell {
    pub fn from_trials(scenario: &str, condition: Condition, trials: Vec<TrialResult>) -> Self {
        let n = trials.len().max(1) as f64;
        Self {
            scenario: scenario.to_string(),
            condition,
            retrieval_pct: trials.iter().map(|t| t.retrieval_pct).sum::<f64>() / n,
            conflict_pct: trials.iter().map(|t| t.conflict_pct).sum::<f64>() / n,
            instances: trials.iter().map(|t| t.instances.len()).sum(),
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub trials: u32,
    pub weekdays: Vec<Weekday>,
    /// Weekday plan requests across all cells.
    pub instances: usize,
    pub cells: Vec<Cell>,
}

impl EvalReport {
    pub fn new(trials: u32, weekdays: Vec<Weekday>, cells: Vec<Cell>) -> Self {
        Self { trials, weekdays, instances: cells.iter().map(|c| c.instances).sum(), cells }
    }

    pub fn cell(&self, scenario: &str, condition: Condition) -> Option<&Cell> {
        self.cells.iter().find(|c| c.scenario == scenario && c.condition == condition)
    }

    pub fn scenarios(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.scenario.as_str()) {
                out.push(&c.scenario);
            }
        }
        out
    }

    /// `(scenario, condition, metric, value)` rows, two metrics per cell.
    pub fn rows(&self) -> Vec<(&str, Condition, &'static str, f64)> {
        self.cells
            .iter()
            .flat_map(|c| {
                [
                    (c.scenario.as_str(), c.condition, "retrieval_pct", c.retrieval_pct),
                    (c.scenario.as_str(), c.condition, "conflict_pct", c.conflict_pct),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

pub fn render(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = String::from("scenario,condition,metric,value\n");
            for (scenario, condition, metric, value) in report.rows() {
                let _ = writeln!(s, "{scenario},{},{metric},{value:.2}", condition.slug());
            }
            s
        }
        ReportFormat::Text => {
            let mut s = format!(
                "{:<16} {:<12} {:>10} {:>10} {:>9}\n",
                "scenario", "condition", "retrieval", "conflict", "instances"
            );
            for c in &report.cells {
                let _ = writeln!(
                    s,
                    "{:<16} {:<12} {:>9.1}% {:>9.1}% {:>9}",
                    c.scenario,
                    c.condition.slug(),
                    c.retrieval_pct,
                    c.conflict_pct,
                    c.instances
                );
            }
            let _ = writeln!(s, "total instances: {}", report.instances);
            s
        }
    }
}

/// Writes `report.json` and `report.csv` into `dir`, creating it if needed.
pub fn emit_report(report: &EvalReport, dir: impl AsRef<Path>) -> std::io::Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, format) in [("report.json", ReportFormat::Json), ("report.csv", ReportFormat::Csv)] {
        let path = dir.join(name);
        std::fs::write(&path, render(report, format))?;
        written.push(path);
    }
    Ok(written)
}
