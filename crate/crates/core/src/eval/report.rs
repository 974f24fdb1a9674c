use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::walk::WalkStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Link,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Classification => "classification",
            Task::Link => "link",
        }
    }
}

/// One row of a strategy comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    /// `fixed` or `degree`.
    pub strategy: String,
    pub nwpd_or_fixed: usize,
    pub walk_length: usize,
    pub total_walks: usize,
    /// Percent, averaged over `seeds` runs.
    pub accuracy: f64,
    pub accuracy_std: f64,
    pub seeds: usize,
    /// `100 (1 - TNW / TNW_fixed)`; set by [`apply_baseline`].
    pub decrease_pct: Option<f64>,
    /// `accuracy - accuracy_fixed`; set by [`apply_baseline`].
    pub gain: Option<f64>,
    pub auc: Option<f64>,
    pub operator: Option<String>,
}

impl EvalReport {
    pub fn new(
        task: Task,
        strategy: WalkStrategy,
        walk_length: usize,
        total_walks: usize,
        accuracy: f64,
    ) -> Self {
        EvalReport {
            task,
            strategy: strategy.kind().to_string(),
            nwpd_or_fixed: strategy.multiplier(),
            walk_length,
            total_walks,
            accuracy,
            accuracy_std: 0.0,
            seeds: 1,
            decrease_pct: None,
            gain: None,
            auc: None,
            operator: None,
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.strategy == "fixed"
    }
}

/// Fills `decrease_pct` and `gain` against the first fixed-strategy row with
/// the same task and walk length. Rows without such a baseline keep `None`.
pub fn apply_baseline(reports: &mut [EvalReport]) {
    for i in 0..reports.len() {
        let base = reports
            .iter()
            .find(|r| {
                r.is_fixed() && r.task == reports[i].task && r.walk_length == reports[i].walk_length
            })
            .map(|r| (r.total_walks, r.accuracy));
        let row = &mut reports[i];
        match base {
            Some((tnw, acc)) if tnw > 0 => {
                row.decrease_pct = Some(100.0 * (1.0 - row.total_walks as f64 / tnw as f64));
                row.gain = Some(row.accuracy - acc);
            }
            _ => {
                row.decrease_pct = None;
                row.gain = None;
            }
        }
    }
}

pub const REPORT_CSV_HEADER: &str =
    "strategy,nwpd_or_fixed,walk_length,total_walks,decrease_pct,accuracy,gain";

/// Writes the comparison table; missing baseline columns are left empty.
pub fn write_reports_csv<W: Write>(reports: &[EvalReport], mut out: W) -> io::Result<()> {
    writeln!(out, "{REPORT_CSV_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.strategy,
            r.nwpd_or_fixed,
            r.walk_length,
            r.total_walks,
            opt(r.decrease_pct),
            r.accuracy,
            opt(r.gain)
        )?;
    }
    Ok(())
}
