use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use trisys::annotator::{
    annotate, read_annotated, read_trajectory, write_annotated, NoisyRetriever, OracleRetriever,
    Retriever, DEFAULT_DELTA_T, DEFAULT_EPSILON,
};
use trisys::critic_train::{eval_critic, read_frames, train_critic_with, TrainConfig};
use trisys::harness::{
    ablation_left_cup, emit_table, make_training_corpus, run_campaign, sha256_hex, split_heldout,
    write_corpus, AblationConfig, BrainKind, CampaignConfig, CampaignReport, CorpusConfig,
    CriticKind,
};
use trisys::scheduler::{SchedulerConfig, SchedulerKind};
use trisys::world::ScenarioName;

#[derive(Parser)]
#[command(name = "trisys", version, about = "Critic-guided scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (scheduler, scenario) cell and write a run directory.
    RunCampaign(CampaignArgs),
    /// Demonstrate, annotate and label a critic training corpus.
    MakeCorpus(CorpusArgs),
    /// Fit the learned critic on a frames file and score a held-out split.
    TrainCritic(TrainArgs),
    /// Segment recorded trajectories against reference labels.
    Annotate(AnnotateArgs),
    /// The four left-cup ablation cases.
    Ablation(AblationArgs),
    /// Print the CSV summary table of a campaign report.
    EmitTable(TableArgs),
}

/// Scheduler overrides applied on top of any config file.
#[derive(Args, Clone, Debug, Default)]
struct SchedulerFlags {
    /// Completion threshold; a verdict strictly above it completes the goal.
    #[arg(long, allow_negative_numbers = true)]
    tau_succ: Option<f64>,
    /// Ticks without a new value maximum before a stagnation reset.
    #[arg(long)]
    n_stag: Option<u64>,
    /// Action chunk horizon H.
    #[arg(long = "horizon", short = 'H')]
    horizon: Option<usize>,
    /// Ticks between a critic evaluation and its delivery.
    #[arg(long)]
    critic_lag: Option<u64>,
    #[arg(long)]
    max_episode_ticks: Option<u64>,
}

impl SchedulerFlags {
    fn apply(&self, cfg: &mut SchedulerConfig) {
        if let Some(v) = self.tau_succ {
            cfg.tau_succ = v;
        }
        if let Some(v) = self.n_stag {
            cfg.n_stag = v;
        }
        if let Some(v) = self.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = self.critic_lag {
            cfg.critic_lag = v;
        }
        if let Some(v) = self.max_episode_ticks {
            cfg.max_episode_ticks = v;
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CriticArg {
    Oracle,
    Learned,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BrainArg {
    Oracle,
    Biased,
}

#[derive(Args)]
struct CampaignArgs {
    /// TOML campaign config; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Episodes per cell.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Comma list, e.g. `scattered,fallen`.
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<ScenarioName>>,
    /// Comma list of `single`, `dual`, `tri`.
    #[arg(long, value_delimiter = ',')]
    schedulers: Option<Vec<SchedulerKind>>,
    #[arg(long, value_enum)]
    brain: Option<BrainArg>,
    #[arg(long, value_enum)]
    critic: Option<CriticArg>,
    /// Saved learned critic (JSON from train-critic).
    #[arg(long)]
    critic_path: Option<PathBuf>,
    #[command(flatten)]
    sched: SchedulerFlags,
}

#[derive(Args)]
struct CorpusArgs {
    /// TOML corpus config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Demonstrations per scenario.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<ScenarioName>>,
    /// Retriever label corruption rate.
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    /// frames.jsonl written by make-corpus.
    #[arg(long)]
    frames: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hold out every k-th source episode; 0 trains on everything.
    #[arg(long, default_value_t = 5)]
    heldout_every: usize,
}

#[derive(Args)]
struct AnnotateArgs {
    /// A `.traj` file or a directory of them.
    #[arg(long)]
    trajectories: PathBuf,
    /// Reference segmentation: an `.ann` file or a directory keyed by id.
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA_T)]
    delta_t: usize,
    /// Retriever label corruption rate.
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AblationArgs {
    /// TOML ablation config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[command(flatten)]
    sched: SchedulerFlags,
}

#[derive(Args)]
struct TableArgs {
    /// report.json from run-campaign.
    #[arg(long)]
    report: PathBuf,
    /// Also write the table here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, &bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(bytes)
}

/// `manifest.json` naming each artifact with its digest, plus the seeds used.
fn write_manifest(dir: &Path, kind: &str, seeds: serde_json::Value, files: &[&str]) -> Result<()> {
    let mut listed = Vec::new();
    for f in files {
        let bytes = fs::read(dir.join(f)).with_context(|| format!("hashing {f}"))?;
        listed.push(json!({ "file": f, "sha256": sha256_hex(&bytes) }));
    }
    write_json(
        &dir.join("manifest.json"),
        &json!({ "kind": kind, "seeds": seeds, "files": listed }),
    )?;
    Ok(())
}

fn run_campaign_cmd(a: CampaignArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => CampaignConfig::from_toml_str(&read_text(p)?)?,
        None => CampaignConfig::default(),
    };
    if let Some(n) = a.episodes {
        cfg.episodes_per_cell = n;
    }
    if let Some(s) = a.base_seed {
        cfg.base_seed = s;
    }
    if let Some(s) = a.scenarios {
        cfg.scenarios = s;
    }
    if let Some(s) = a.schedulers {
        cfg.schedulers = s;
    }
    match a.brain {
        Some(BrainArg::Oracle) => cfg.agents.brain = BrainKind::Oracle,
        Some(BrainArg::Biased) => cfg.agents.brain = BrainKind::Biased,
        None => {}
    }
    match a.critic {
        Some(CriticArg::Oracle) => cfg.agents.critic = CriticKind::Oracle,
        Some(CriticArg::Learned) => cfg.agents.critic = CriticKind::Learned,
        None => {}
    }
    if a.critic_path.is_some() {
        cfg.agents.critic_path = a.critic_path;
    }
    a.sched.apply(&mut cfg.scheduler);
    // The controller's chunk length follows the scheduler's H.
    cfg.agents.cerebellum.horizon = cfg.scheduler.horizon;

    info!(
        "campaign {}: {} cells x {} episodes",
        cfg.name,
        cfg.scenarios.len() * cfg.schedulers.len(),
        cfg.episodes_per_cell
    );
    let report = run_campaign(&cfg, Some(&a.out))?;
    let table = emit_table(&report)?;
    fs::write(a.out.join("table.csv"), &table)?;
    print!("{table}");
    let errors: usize = report.cells.iter().map(|c| c.errors).sum();
    if errors > 0 {
        log::warn!("{errors} episodes ended with an agent error; see report.json");
    }
    info!("wrote {}", a.out.display());
    Ok(())
}

fn make_corpus_cmd(a: CorpusArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => CorpusConfig::from_toml_str(&read_text(p)?)?,
        None => CorpusConfig::default(),
    };
    if let Some(n) = a.episodes {
        cfg.episodes_per_scenario = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(s) = a.scenarios {
        cfg.scenarios = s;
    }
    if let Some(r) = a.rho {
        cfg.retriever_rho = r;
    }
    let corpus = make_training_corpus(&cfg)?;
    let m = write_corpus(&a.out, &cfg, &corpus)?;
    println!(
        "{} episodes, {} frames ({} anomaly) -> {}",
        m.episodes,
        m.frames,
        m.anomaly_frames,
        a.out.display()
    );
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let file = fs::File::open(&a.frames).with_context(|| format!("opening {}", a.frames.display()))?;
    let frames = read_frames(BufReader::new(file))?;
    let (train, held) = split_heldout(&frames, a.heldout_every);
    if train.is_empty() {
        bail!("held-out split left no training frames");
    }
    let cfg = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let corpus_id = sha256_hex(&fs::read(&a.frames)?);
    info!("training on {} frames, holding out {}", train.len(), held.len());
    let critic = train_critic_with(&train, &cfg, &corpus_id)?;
    fs::create_dir_all(&a.out)?;
    write_json(&a.out.join("critic.json"), &critic)?;
    let mut files = vec!["critic.json"];
    if !held.is_empty() {
        let m = eval_critic(&critic, &held)?;
        println!(
            "held-out frames {}: bin MAE {:?}, anomaly precision {:?}, recall {:?}",
            m.frames, m.bin_mae, m.anomaly_precision, m.anomaly_recall
        );
        write_json(&a.out.join("metrics.json"), &m)?;
        files.push("metrics.json");
    }
    write_manifest(
        &a.out,
        "train-critic",
        json!({ "train_seed": a.seed, "corpus_sha256": corpus_id }),
        &files,
    )
}

fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    v.retain(|p| p.extension().is_some_and(|e| e == ext));
    v.sort();
    Ok(v)
}

fn annotate_cmd(a: AnnotateArgs) -> Result<()> {
    let pairs: Vec<(PathBuf, PathBuf)> = if a.trajectories.is_dir() {
        files_with_ext(&a.trajectories, "traj")?
            .into_iter()
            .map(|t| {
                let stem = t.file_stem().unwrap_or_default().to_owned();
                let r = a.reference.join(stem).with_extension("ann");
                (t, r)
            })
            .collect()
    } else {
        vec![(a.trajectories.clone(), a.reference.clone())]
    };
    fs::create_dir_all(&a.out)?;
    let mut names = Vec::new();
    for (traj_path, ref_path) in &pairs {
        let traj = read_trajectory(traj_path)?;
        let reference = read_annotated(ref_path)
            .with_context(|| format!("reference for {}", traj.id))?;
        let oracle = OracleRetriever::new(reference.segments, None);
        let noisy = NoisyRetriever {
            inner: oracle.clone(),
            rho: a.rho,
            seed: a.seed,
        };
        let retriever: &dyn Retriever = if a.rho > 0.0 { &noisy } else { &oracle };
        let ep = annotate(&traj, retriever, a.epsilon, a.delta_t)?;
        let name = format!("{}.ann", traj.id);
        fs::write(a.out.join(&name), write_annotated(&ep))?;
        info!("{}: {} segments", traj.id, ep.segments.len());
        names.push(name);
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    write_manifest(&a.out, "annotate", json!({ "retriever_seed": a.seed, "rho": a.rho }), &refs)?;
    println!("annotated {} trajectories -> {}", names.len(), a.out.display());
    Ok(())
}

fn ablation_cmd(a: AblationArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => AblationConfig::from_toml_str(&read_text(p)?)?,
        None => AblationConfig::default(),
    };
    if let Some(n) = a.episodes {
        cfg.episodes = n;
    }
    if let Some(s) = a.base_seed {
        cfg.base_seed = s;
    }
    a.sched.apply(&mut cfg.scheduler);
    let report = ablation_left_cup(&cfg)?;
    fs::create_dir_all(&a.out)?;
    write_json(&a.out.join("ablation.json"), &report)?;
    for c in &report.cases {
        println!(
            "case {} ({}): {}/{} success, right-arm share {:?}",
            c.case.case, c.description, c.successes, c.episodes, c.cup_arm_right_fraction
        );
    }
    let seeds: Vec<u64> = (0..report.cases.len() as u64).map(|i| cfg.base_seed + i).collect();
    write_manifest(&a.out, "ablation", json!({ "case_seeds": seeds }), &["ablation.json"])
}

fn emit_table_cmd(a: TableArgs) -> Result<()> {
    let report: CampaignReport = serde_json::from_str(&read_text(&a.report)?)
        .with_context(|| format!("parsing {}", a.report.display()))?;
    let table = emit_table(&report)?;
    match &a.out {
        Some(p) => fs::write(p, &table)?,
        None => print!("{table}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::RunCampaign(a) => run_campaign_cmd(a),
        Command::MakeCorpus(a) => make_corpus_cmd(a),
        Command::TrainCritic(a) => train_cmd(a),
        Command::Annotate(a) => annotate_cmd(a),
        Command::Ablation(a) => ablation_cmd(a),
        Command::EmitTable(a) => emit_table_cmd(a),
    }
}
