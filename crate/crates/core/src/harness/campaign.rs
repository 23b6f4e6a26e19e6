//! Seeded campaigns over (scheduler, scenario) cells.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{AgentSet, CampaignConfig};
use crate::scheduler::{run_with, stale_actions, Agents, EpisodeTrace, SchedulerKind, TriggerKind};
use crate::seed;
use crate::world::ScenarioName;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    /// `mix(cell_seed, episode)`; seeds the scenario and the controller.
    pub seed: u64,
    pub success: bool,
    pub brain_queries: u64,
    pub oscillations: usize,
    pub stagnation_resets: usize,
    pub anomaly_events: usize,
    pub ticks: usize,
    pub subtasks_done: usize,
    pub stale_actions: usize,
    pub error: Option<String>,
    pub trace_file: String,
    pub trace_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub scheduler: SchedulerKind,
    pub scenario: ScenarioName,
    pub cell_index: usize,
    pub cell_seed: u64,
    pub episodes: usize,
    pub successes: usize,
    pub mean_brain_queries: f64,
    pub oscillations: usize,
    pub stagnation_resets: usize,
    pub anomaly_events: usize,
    pub mean_ticks: f64,
    /// Entry `k` counts episodes with at least `k + 1` leading subtasks done.
    pub subtask_success: Vec<usize>,
    pub errors: usize,
    pub stale_actions: usize,
    pub episode_details: Vec<EpisodeSummary>,
}

impl CellReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.episodes as f64
    }

    pub fn mean_oscillations(&self) -> f64 {
        self.oscillations as f64 / self.episodes as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub name: String,
    pub base_seed: u64,
    pub episodes_per_cell: usize,
    pub config: CampaignConfig,
    pub cells: Vec<CellReport>,
}

impl CampaignReport {
    pub fn cell(&self, scheduler: SchedulerKind, scenario: ScenarioName) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.scheduler == scheduler && c.scenario == scenario)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub base_seed: u64,
    pub config: String,
    pub report: String,
    pub traces: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub scheduler: SchedulerKind,
    pub scenario: ScenarioName,
    pub seed: u64,
    pub sha256: String,
}

pub fn trace_file_name(kind: SchedulerKind, scenario: ScenarioName, episode: usize) -> String {
    format!("traces/{kind}-{scenario}-{episode:03}.jsonl")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn summarize(trace: &EpisodeTrace, episode: usize, file: String, bytes: &[u8]) -> EpisodeSummary {
    EpisodeSummary {
        episode,
        seed: trace.seed,
        success: trace.success,
        brain_queries: trace.brain_query_count,
        oscillations: trace.oscillations(),
        stagnation_resets: trace.stagnation_resets(),
        anomaly_events: trace
            .events
            .iter()
            .filter(|e| e.kind == TriggerKind::Anomaly)
            .count(),
        ticks: trace.records.len(),
        subtasks_done: trace.subtasks_done,
        stale_actions: stale_actions(trace).len(),
        error: trace.error.clone(),
        trace_file: file,
        trace_sha256: sha256_hex(bytes),
    }
}

fn aggregate(
    kind: SchedulerKind,
    scenario: ScenarioName,
    cell_index: usize,
    cell_seed: u64,
    subtasks_total: usize,
    details: Vec<EpisodeSummary>,
) -> CellReport {
    let n = details.len();
    let mut subtask_success = vec![0; subtasks_total];
    for d in &details {
        for slot in subtask_success.iter_mut().take(d.subtasks_done) {
            *slot += 1;
        }
    }
    let sum = |f: fn(&EpisodeSummary) -> usize| details.iter().map(f).sum::<usize>();
    CellReport {
        scheduler: kind,
        scenario,
        cell_index,
        cell_seed,
        episodes: n,
        successes: sum(|d| d.success as usize),
        mean_brain_queries: details.iter().map(|d| d.brain_queries).sum::<u64>() as f64 / n as f64,
        oscillations: sum(|d| d.oscillations),
        stagnation_resets: sum(|d| d.stagnation_resets),
        anomaly_events: sum(|d| d.anomaly_events),
        mean_ticks: sum(|d| d.ticks) as f64 / n as f64,
        subtask_success,
        errors: sum(|d| d.error.is_some() as usize),
        stale_actions: sum(|d| d.stale_actions),
        episode_details: details,
    }
}

/// Run every cell. With `out_dir`, traces, `report.json`, `config.toml` and
/// `manifest.json` are written beneath it; the report is identical either way.
pub fn run_campaign(config: &CampaignConfig, out_dir: Option<&Path>) -> Result<CampaignReport> {
    config.validate()?;
    let agents = AgentSet::build(&config.agents)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir.join("traces"))?;
    }
    let cells: Vec<(usize, SchedulerKind, ScenarioName)> = config
        .schedulers
        .iter()
        .flat_map(|k| config.scenarios.iter().map(move |s| (*k, *s)))
        .enumerate()
        .map(|(i, (k, s))| (i, k, s))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.episodes_per_cell).map(move |e| (c, e)))
        .collect();

    let results: Vec<Result<(EpisodeSummary, usize)>> = jobs
        .par_iter()
        .map(|&(c, e)| {
            let (index, kind, scenario) = cells[c];
            let cell_seed = config.base_seed + index as u64;
            let ep_seed = seed::mix(&[cell_seed, e as u64]);
            let sc = config.scenario(scenario, ep_seed)?;
            let cerebellum = agents.cerebellum(ep_seed);
            let a = Agents {
                brain: agents.brain.as_ref(),
                cerebellum: &cerebellum,
                critic: Some(agents.critic.as_ref()),
            };
            let trace = run_with(kind, &sc, &a, &config.scheduler)?;
            let bytes = trace.to_jsonl()?;
            let file = trace_file_name(kind, scenario, e);
            if let Some(dir) = out_dir {
                fs::write(dir.join(&file), &bytes)?;
            }
            Ok((summarize(&trace, e, file, &bytes), trace.subtasks_total))
        })
        .collect();

    let mut per_cell: Vec<Vec<EpisodeSummary>> = vec![Vec::new(); cells.len()];
    let mut totals = vec![0; cells.len()];
    for (&(c, _), r) in jobs.iter().zip(results) {
        let (summary, total) = r?;
        per_cell[c].push(summary);
        totals[c] = total;
    }
    let report = CampaignReport {
        name: config.name.clone(),
        base_seed: config.base_seed,
        episodes_per_cell: config.episodes_per_cell,
        config: config.clone(),
        cells: cells
            .iter()
            .zip(per_cell)
            .map(|(&(i, k, s), d)| aggregate(k, s, i, config.base_seed + i as u64, totals[i], d))
            .collect(),
    };
    if let Some(dir) = out_dir {
        write_run_dir(dir, config, &report)?;
    }
    Ok(report)
}

fn write_run_dir(dir: &Path, config: &CampaignConfig, report: &CampaignReport) -> Result<()> {
    fs::write(dir.join("report.json"), report.to_json()?)?;
    fs::write(dir.join("config.toml"), config.to_toml_string()?)?;
    let manifest = Manifest {
        name: report.name.clone(),
        base_seed: report.base_seed,
        config: "config.toml".into(),
        report: "report.json".into(),
        traces: report
            .cells
            .iter()
            .flat_map(|c| {
                c.episode_details.iter().map(move |d| ManifestEntry {
                    file: d.trace_file.clone(),
                    scheduler: c.scheduler,
                    scenario: c.scenario,
                    seed: d.seed,
                    sha256: d.trace_sha256.clone(),
                })
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CampaignConfig {
        CampaignConfig {
            scenarios: vec![ScenarioName::Ordered, ScenarioName::Fallen],
            episodes_per_cell: 2,
            ..Default::default()
        }
    }

    #[test]
    fn cell_arithmetic_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_campaign(&small(), Some(dir.path())).unwrap();
        assert_eq!(r.cells.len(), 6);
        let files = fs::read_dir(dir.path().join("traces")).unwrap().count();
        assert_eq!(files, 12);
        for (i, c) in r.cells.iter().enumerate() {
            assert_eq!(c.cell_seed, 1000 + i as u64);
            assert!(c.successes <= c.episodes);
            assert_eq!(c.stale_actions, 0);
        }
        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.traces.len(), 12);
        let again = run_campaign(&small(), None).unwrap();
        assert_eq!(again.to_json().unwrap(), r.to_json().unwrap());
    }
}
