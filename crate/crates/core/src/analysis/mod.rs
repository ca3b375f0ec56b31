//! Headline quantities built on propagation results: port statistics,
//! power penalty, scaling studies and inference accuracy.

mod accuracy;
mod model;
mod penalty;
mod scaling;
mod stats;

pub use accuracy::{accuracy_eval, compile_model, AccuracyResult, AccuracyStudy, LossAxis, LossPoint, ToleranceReport};
pub use model::{argmax_power, train_reference, Activation, ComplexMlp, TrainConfig, TrainReport};
pub use penalty::{power_penalty, required_launch_dbm, PenaltyComponents, PenaltyMode, PenaltyReport};
pub use scaling::{layer_stats, network_stats, LayerStats, NetworkStats, NetworkStudy, RandomWeights};
pub use stats::{port_statistics, Quantity};
