use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason", rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// Geometry invalid for this cell (e.g. outside the field of view).
    Skipped(String),
    /// Bisection did not bracket the target.
    Unconverged(String),
}

impl CellStatus {
    fn label(&self) -> (&'static str, &str) {
        match self {
            CellStatus::Ok => ("ok", ""),
            CellStatus::Skipped(r) => ("skipped", r),
            CellStatus::Unconverged(r) => ("unconverged", r),
        }
    }
}

/// One swept parameter value. Metrics that do not apply to the experiment are
/// `None` and render as empty CSV fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub value: f64,
    pub trials: usize,
    /// Trials that produced an estimate.
    pub completed: usize,
    pub median_deg: Option<f64>,
    pub p90_deg: Option<f64>,
    pub accuracy_pct: Option<f64>,
    pub resolution_m: Option<f64>,
    pub theoretical_m: Option<f64>,
    pub mean_error_m: Option<f64>,
    pub p90_error_m: Option<f64>,
    pub status: CellStatus,
}

impl ReportCell {
    pub fn empty(value: f64, trials: usize) -> Self {
        ReportCell {
            value,
            trials,
            completed: 0,
            median_deg: None,
            p90_deg: None,
            accuracy_pct: None,
            resolution_m: None,
            theoretical_m: None,
            mean_error_m: None,
            p90_error_m: None,
            status: CellStatus::Ok,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameter: String,
    pub seed: u64,
    pub cells: Vec<ReportCell>,
}

pub const REPORT_HEADER: &str =
    "experiment,parameter,value,trials,completed,seed,median_deg,p90_deg,accuracy_pct,\
resolution_m,theoretical_m,mean_error_m,p90_error_m,status,detail";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(REPORT_HEADER);
        out.push('\n');
        for c in &self.cells {
            let (state, detail) = c.status.label();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.experiment,
                self.parameter,
                c.value,
                c.trials,
                c.completed,
                self.seed,
                opt(c.median_deg),
                opt(c.p90_deg),
                opt(c.accuracy_pct),
                opt(c.resolution_m),
                opt(c.theoretical_m),
                opt(c.mean_error_m),
                opt(c.p90_error_m),
                state,
                detail.replace(',', ";"),
            );
        }
        out
    }

    pub fn cell(&self, value: f64) -> Option<&ReportCell> {
        self.cells.iter().find(|c| (c.value - value).abs() < 1e-9)
    }
}
