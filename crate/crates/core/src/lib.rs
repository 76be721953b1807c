//! Ontology matching with heterogeneous graph attention over class
//! neighbourhoods, trained as a weight-shared Siamese encoder.
//!
//! Pipeline: [`ontology`] loads the interchange JSON, [`preprocess`] turns
//! labels into bags of words, [`embedding`] turns those into vectors,
//! [`neighborhood`] builds the five relation subgraphs per class, [`gat`]
//! encodes and compares classes, [`trainer`] fits the model and picks a
//! threshold, [`matcher`] emits one-to-one alignments and [`metrics`] scores
//! them against a reference. [`track`] runs the whole loop over a directory
//! of reference-aligned ontology pairs.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which training and gradient checks use.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod embedding;
pub mod error;
pub mod features;
pub mod gat;
pub mod gradcheck;
pub mod matcher;
pub mod metrics;
pub mod neighborhood;
pub mod ontology;
pub mod preprocess;
pub mod scalar;
pub mod track;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Model = gat::SiameseModel<f64>;
pub type ModelF32 = gat::SiameseModel<f32>;
pub type Embeddings = embedding::EmbeddingTable<f64>;
pub type EmbeddingsF32 = embedding::EmbeddingTable<f32>;
pub type Features = gat::GraphFeatures<f64>;
pub type Gradients = gat::Gradients<f64>;
