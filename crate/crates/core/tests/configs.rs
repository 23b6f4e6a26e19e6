use std::fs;
use std::path::PathBuf;

use trisys::agents::SubtaskGoal;
use trisys::harness::{AblationConfig, CampaignConfig, CorpusConfig};

fn config(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn shipped_defaults_match_code_defaults() {
    assert_eq!(CampaignConfig::from_toml_str(&config("campaign.toml")).unwrap(), CampaignConfig::default());
    assert_eq!(CorpusConfig::from_toml_str(&config("corpus.toml")).unwrap(), CorpusConfig::default());
    assert_eq!(AblationConfig::from_toml_str(&config("ablation.toml")).unwrap(), AblationConfig::default());
}

#[test]
fn partial_config_keeps_unset_defaults() {
    let cfg = CampaignConfig::from_toml_str(&config("lagged_noisy.toml")).unwrap();
    assert_eq!(cfg.scheduler.critic_lag, 4);
    assert_eq!(cfg.scheduler.horizon, 16);
    assert_eq!(cfg.noise_level, Some(0.01));
    assert_eq!(cfg.scheduler.tau_for(&SubtaskGoal::right_object("cup")), -0.03);
    assert_eq!(cfg.scheduler.tau_for(&SubtaskGoal::right_object("plate")), -0.041);
}

#[test]
fn written_config_round_trips() {
    let cfg = CampaignConfig::from_toml_str(&config("lagged_noisy.toml")).unwrap();
    let back = CampaignConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(CampaignConfig::from_toml_str("episodes = 3").is_err());
    assert!(CorpusConfig::from_toml_str("delta_t = 0").is_err());
}
