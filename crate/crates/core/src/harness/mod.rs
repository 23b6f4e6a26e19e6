//! Seeded campaigns, the critic corpus pipeline, the left-cup ablation and
//! report tables.
//!
//! Seed derivation:
//! * campaign cell `i` (scheduler-major, then scenario) uses `base_seed + i`;
//!   episode `e` in it uses `mix(cell_seed, e)` for both the scenario and the
//!   controller.
//! * ablation case `i` (0-based) uses `base_seed + i`, episodes as above.
//! * corpus episode `e` of the `k`-th scenario uses `mix(seed, k, e)`.

mod ablation;
mod campaign;
mod config;
mod corpus;
mod table;

pub use self::ablation::{
    ablation_left_cup, AblationCase, AblationConfig, AblationReport, CaseReport, CASES,
};
pub use self::campaign::{
    run_campaign, sha256_hex, trace_file_name, CampaignReport, CellReport, EpisodeSummary,
    Manifest, ManifestEntry,
};
pub use self::config::{
    AgentConfig, AgentSet, BrainKind, CampaignConfig, CriticKind, ScheduledPerturbation,
};
pub use self::corpus::{
    demonstrate, episode_id, make_training_corpus, split_heldout, write_corpus, Corpus,
    CorpusConfig, CorpusManifest, Demonstration,
};
pub use self::table::{emit_table, parse_table, table_rows, TableRow, TABLE_COLUMNS};
