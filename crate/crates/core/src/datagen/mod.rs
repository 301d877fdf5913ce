//! Problem generators, corruption, reductions and dataset assembly.

pub mod corrupt;
pub mod dataset;
pub mod generators;
pub mod reduce;
pub mod rng;

pub use corrupt::{corrupt, task_vocab, CorruptionConfig, CorruptionStats};
pub use dataset::{build_dataset, write_dataset, Dataset, Format, GenConfig, GenParams, Record};
pub use rng::SplitMix64;
