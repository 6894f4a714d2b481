//! Knowledge-distance toolkit for citation corpora.
//!
//! Measures how far apart fields of study are by comparing the sets of
//! papers that cite into them, then builds the derived structures on top
//! of that measure:
//!
//! * [`corpus`] — load, validate, filter, and year-slice a citation corpus
//!   together with its two-level field ontology.
//! * [`index`] — inbound-citation index and per-field citer collections as
//!   compressed integer sets; the performance core.
//! * [`distance`] — the normalized log-ratio distance `kd`, its complement
//!   `kr`, relation classes, full distance matrices, and time series.
//! * [`space`] — the weighted field graph, its minimum-spanning-tree
//!   backbone, degree-targeted augmentation, and exports.
//! * [`consilience`] — threshold clustering over the distance matrix:
//!   partitions, merge profiles, thresholds-for-k, and the
//!   family-transitivity audit.
//! * [`synth`] — deterministic synthetic-corpus generator with planted
//!   block structure, plus the brute-force oracles the test suites check
//!   the fast paths against.
//!
//! Distance values are generic over the scalar type via [`Real`]; `f64` is
//! the default everywhere and the type the command-line tool uses.

pub mod consilience;
pub mod corpus;
pub mod distance;
mod error;
pub mod index;
mod scalar;
pub mod space;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub use corpus::{Corpus, CorpusSlice, DocType, FieldId, FieldLevel, PaperId};
pub use distance::{DistanceMatrix, Kd, RelationClass, TimeSeries};
pub use index::{InboundIndex, PaperSet};

/// Single-precision aliases; counts above 2^24 lose exactness in `f32`,
/// so these are only appropriate for small corpora.
pub type DistanceMatrixF32 = distance::DistanceMatrix<f32>;
pub type SpaceGraphF32 = space::SpaceGraph<f32>;
pub type MergeProfileF32 = consilience::MergeProfile<f32>;
pub type PartitionF32 = consilience::Partition<f32>;
