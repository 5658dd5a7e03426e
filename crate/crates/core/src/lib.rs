//! Clustering of video-on-demand clients by binary request patterns with
//! ART1, and prefetching of each cluster's prototype videos ahead of the
//! next session window.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`ingest`] parses request logs and cuts per-client sessions,
//! * [`features`] maps sessions onto binary pattern vectors,
//! * [`art1`] clusters the patterns, [`snapshot`] persists networks,
//! * [`prefetch`] turns prototypes into plans and scores them,
//! * [`workload`] synthesises planted traces,
//! * [`experiment`] ties everything into runs and vigilance sweeps.

pub mod art1;
pub mod config;
pub mod experiment;
pub mod features;
pub mod ingest;
pub mod prefetch;
pub mod snapshot;
pub mod workload;

use std::path::PathBuf;

use thiserror::Error;

pub use art1::{Art1Config, Art1Error, Art1Network, Assignment, CapacityPolicy, ClusterReport};
pub use config::ExperimentConfig;
pub use features::{BaseVector, PatternVector};
pub use ingest::{AccessEvent, LogRecord, Session};
pub use prefetch::{CacheMetrics, PrefetchPlan};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Features(#[from] features::FeatureError),
    #[error(transparent)]
    Art1(#[from] art1::Art1Error),
    #[error(transparent)]
    Prefetch(#[from] prefetch::PrefetchError),
    #[error(transparent)]
    Snapshot(#[from] snapshot::SnapshotError),
    #[error(transparent)]
    Workload(#[from] workload::WorkloadError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    NoData(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 1 usage, 2 data, 3 cluster capacity.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Workload(_) => 1,
            Error::Art1(e) if is_capacity(e) => 3,
            _ => 2,
        }
    }
}

fn is_capacity(e: &Art1Error) -> bool {
    match e {
        Art1Error::Capacity { .. } => true,
        Art1Error::InvalidPattern { source, .. } => is_capacity(source),
        _ => false,
    }
}
