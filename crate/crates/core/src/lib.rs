//! Side-by-side document and relational storage engines, a nested-resolver
//! query layer, seeded data generation, a workload harness, geohash range
//! rewriting, and latency and cost analysis.

pub mod analytics;
pub mod bench;
pub mod datagen;
pub mod docstore;
pub mod geohash;
pub mod model;
pub mod queryir;
pub mod relstore;

pub use model::*;
