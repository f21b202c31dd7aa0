//! ooskit: metric-based few-shot out-of-support (OOS) detection.
//!
//! Queries in a few-shot episode may belong to none of the supported
//! classes. This crate scores that possibility five ways (minimum distance,
//! a learnable class-boundary network, a constant background slot, a
//! generic representation point, and its per-episode centered variant),
//! evaluates detectors episodically with exact AUROC/AUPR, trains the
//! affine head and LCBO scorer over fixed embeddings with hand-derived
//! gradients, and analyzes the feature-space geometry the generic point
//! induces: distance-ordering cells, viable-region feasibility by linear
//! programming, OOS-core adjacency witnesses, and 2-D decision maps.
//!
//! ```
//! use ooskit::episodes::{few_shot_split, synth_radial, EpisodeConfig};
//! use ooskit::metric::{AffineHead, Point};
//! use ooskit::metrics::{evaluate, DetectorConfig, EvalConfig};
//!
//! let data = synth_radial(8, 4, 3.0, 0.3, 40, 7)?;
//! let (_train, test) = few_shot_split(&data, 0.5, 11)?;
//! let report = evaluate(
//!     &test,
//!     &DetectorConfig::Groos { generic: Point::origin(4) },
//!     &AffineHead::identity(4),
//!     &EvalConfig {
//!         episodes: 50,
//!         shape: EpisodeConfig { ways: 3, queries_per_class: 4, oos_queries: 8, ..Default::default() },
//!         seed: 77,
//!         per_episode: false,
//!     },
//! )?;
//! assert!(report.auroc_x100.unwrap() > 50.0);
//! # Ok::<(), ooskit::Error>(())
//! ```

#![forbid(unsafe_code)]

pub mod cli;
pub mod detectors;
pub mod episodes;
pub mod error;
pub mod geometry;
pub mod metric;
pub mod metrics;
pub mod params;
pub mod render;
pub mod rng;
pub mod simplex;
pub mod training;

pub use detectors::{DetectorKind, LcboEncoding, LcboScorer, Verdict};
pub use episodes::{EmbeddingDataset, Episode, EpisodeConfig};
pub use error::{Error, Result};
pub use geometry::{
    CellIndex, CellLabel, HalfSpaceSystem, Hyperplane, RegionStatus, ViabilityMode,
};
pub use metric::{AffineHead, ClassId, Point, PrototypeContext};
pub use metrics::{DetectorConfig, EvalConfig, MetricsReport};
pub use training::{TrainConfig, TrainMode, TrainOutcome};
