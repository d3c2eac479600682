use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{EnumerationTable, ExperimentError, SimulationTrace};
use crate::case::LossMetrics;
use crate::switching::{RewardRecord, StepStatus};

/// One CSV line: a policy sequence with its per-dispatch outcomes joined by
/// `;`. Dispatches where nothing was applied or the policy was unavailable
/// show `-`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SummaryRow {
    pub sequence: String,
    pub load_mva: String,
    pub saved: String,
    pub reward: String,
    pub buses_lost: String,
    pub generators_lost: String,
    pub loads_lost: String,
    pub lines_lost: String,
}

type Cell<'a> = (StepStatus, Option<&'a RewardRecord>, Option<&'a LossMetrics>);

fn summarize<'a>(labels: &[&str], cells: impl Iterator<Item = Cell<'a>>) -> SummaryRow {
    let mut cols: [Vec<String>; 7] = Default::default();
    for (status, record, losses) in cells {
        let shown = matches!(status, StepStatus::Applied | StepStatus::Exhausted);
        match (shown, record, losses) {
            (true, Some(r), Some(l)) => {
                let vals = [
                    format!("{:.1}", r.operational_load),
                    if r.saved { "YES" } else { "NO" }.to_string(),
                    format!("{:.3}", r.reward),
                    l.buses.to_string(),
                    l.generators.to_string(),
                    l.loads.to_string(),
                    l.lines.to_string(),
                ];
                for (c, v) in cols.iter_mut().zip(vals) {
                    c.push(v);
                }
            }
            _ => cols.iter_mut().for_each(|c| c.push("-".into())),
        }
    }
    let [load_mva, saved, reward, buses_lost, generators_lost, loads_lost, lines_lost] = cols.map(|c| c.join(";"));
    SummaryRow {
        sequence: labels.join(">"),
        load_mva,
        saved,
        reward,
        buses_lost,
        generators_lost,
        loads_lost,
        lines_lost,
    }
}

impl SimulationTrace {
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        let labels: Vec<&str> = self.dispatches.iter().map(|d| d.policy.label()).collect();
        vec![summarize(
            &labels,
            self.dispatches.iter().map(|d| (d.status, Some(&d.record), Some(&d.losses))),
        )]
    }
}

impl EnumerationTable {
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.rows
            .iter()
            .map(|row| {
                let labels: Vec<&str> = row.sequence.iter().map(String::as_str).collect();
                let mut cells: Vec<Cell> = row
                    .steps
                    .iter()
                    .map(|s| (s.status, s.record.as_ref(), s.losses.as_ref()))
                    .collect();
                cells.resize(labels.len(), (StepStatus::Unavailable, None, None));
                summarize(&labels, cells.into_iter())
            })
            .collect()
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "sequence",
            "load_mva",
            "saved",
            "reward",
            "buses_lost",
            "generators_lost",
            "loads_lost",
            "lines_lost",
        ])
        .map_err(|e| ExperimentError::Usage(e.to_string()))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| ExperimentError::Usage(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `trace.json` and `summary.csv` into `dir`, creating it if needed.
pub fn emit_results<T: Serialize>(dir: &Path, trace: &T, rows: &[SummaryRow]) -> Result<(), ExperimentError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ExperimentError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut json = serde_json::to_string_pretty(trace).expect("traces serialize");
    json.push('\n');
    let trace_path = dir.join("trace.json");
    fs::write(&trace_path, json).map_err(io(&trace_path))?;
    let csv_path = dir.join("summary.csv");
    fs::write(&csv_path, summary_csv(rows)?).map_err(io(&csv_path))?;
    Ok(())
}
