//! Value targets, bin quantization, anomaly windows and the learned critic.

mod features;
mod io;
mod labeling;
mod model;
mod value;

pub use self::features::{goal_features, pooled_features, FEATURE_DIM, POOLED_DIM};
pub use self::io::{read_frames, write_frames};
pub use self::labeling::{
    compute_lmax, label_episode, label_targets, nearest_rank_p90, segment_length, LabeledFrame,
    LmaxTable, DEFAULT_ANOMALY_WINDOW,
};
pub use self::model::{
    eval_critic, evaluate, train_critic, train_critic_with, Confusion, GoalModel, LearnedCritic,
    Metrics, TrainConfig, TrainingMeta,
};
pub use self::value::{
    dequantize, quantize, value_target, Bin, ValueToken, ANOMALY_TOKEN, NUM_BINS, NUM_CLASSES,
};
