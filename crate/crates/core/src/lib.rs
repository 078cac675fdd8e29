//! Committees of LVQ prototype classifiers trained on fair, overlapping class
//! bootstraps.
//!
//! Two combiners are provided. [`committee::SystemA`] takes the plurality vote
//! of its members. [`fec::SystemB`] uses the vote only to pick candidate
//! classes, then decides by a nearest-weight scan over the pooled member
//! weights of those classes.

pub mod committee;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod fec;
pub mod lvq;
pub mod model;
pub mod seed;

pub use committee::{train_committee, CommitteeParams, Member, SystemA, VoteTally};
pub use config::{enumerate_configs, generate_bootstraps, validate_bootstraps, Bootstrap, EnsembleConfig};
pub use dataset::{LabeledDataset, Sample, SplitDataset};
pub use error::{Error, Result};
pub use fec::{build_fec, FecIndex, SystemB};
pub use lvq::{LvqNetwork, TrainParams};
pub use model::{decode_model, encode_model};
