//! CSV summary table, one row per (scheduler, scenario) cell.

use serde::{Deserialize, Serialize};

use super::campaign::CampaignReport;
use crate::scheduler::SchedulerKind;
use crate::world::ScenarioName;
use crate::{Error, Result};

pub const TABLE_COLUMNS: [&str; 8] = [
    "scheduler",
    "scenario",
    "episodes",
    "successes",
    "success_rate",
    "mean_brain_queries",
    "oscillations",
    "stagnation_resets",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub scheduler: SchedulerKind,
    pub scenario: ScenarioName,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_brain_queries: f64,
    pub oscillations: usize,
    pub stagnation_resets: usize,
}

pub fn table_rows(report: &CampaignReport) -> Vec<TableRow> {
    report
        .cells
        .iter()
        .map(|c| TableRow {
            scheduler: c.scheduler,
            scenario: c.scenario,
            episodes: c.episodes,
            successes: c.successes,
            success_rate: c.success_rate(),
            mean_brain_queries: c.mean_brain_queries,
            oscillations: c.oscillations,
            stagnation_resets: c.stagnation_resets,
        })
        .collect()
}

pub fn emit_table(report: &CampaignReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in table_rows(report) {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::parse(format!("flushing table: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::parse(e.to_string()))
}

pub fn parse_table(text: &str) -> Result<Vec<TableRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TABLE_COLUMNS {
        return Err(Error::parse(format!("unexpected table header {header:?}")));
    }
    r.deserialize().map(|row| Ok(row?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_campaign, CampaignConfig};

    #[test]
    fn twelve_cells_round_trip() {
        let cfg = CampaignConfig {
            scenarios: ScenarioName::TABLEWARE.to_vec(),
            episodes_per_cell: 1,
            ..Default::default()
        };
        let report = run_campaign(&cfg, None).unwrap();
        let text = emit_table(&report).unwrap();
        assert_eq!(text.lines().count(), 13);
        assert_eq!(text.lines().next().unwrap(), TABLE_COLUMNS.join(","));
        assert_eq!(parse_table(&text).unwrap(), table_rows(&report));
        assert!(parse_table("a,b\n1,2\n").is_err());
    }
}
