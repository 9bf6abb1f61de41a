//! Data-mining toolkit for categorical incident records: CSV ingestion
//! with table-driven encoding, a roster of classifiers trained from
//! first principles, per-class evaluation reports, and geographic
//! density grids for map rendering.

pub mod classifiers;
pub mod dataset;
pub mod digest;
pub mod evaluation;
pub mod geodensity;

pub(crate) mod rng;

pub use classifiers::{ClassProbabilities, ClassifierConfig, ClassifierModel};
pub use dataset::{AttributeKind, AttributeSchema, ClassLabel, Dataset, EncodedRecord, GeoPoint};
