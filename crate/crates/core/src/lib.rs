//! Longest-leg path distance (LLPD) toolkit: exact and multiscale approximate
//! LLPD, kNN-LLPD denoising, and LLPD spectral clustering with automatic
//! selection of the cluster count and kernel scale.

pub mod bench;
pub mod bounds;
pub mod dataset;
pub mod denoise;
pub mod error;
pub mod exec;
pub mod graph;
pub mod io;
pub mod llpd;
pub mod metrics;
pub mod spectral;
pub mod union_find;

pub use dataset::{generate, load_csv, DatasetKind, GeneratorSpec, Label, LabeledPointCloud, PointCloud, NOISE};
pub use error::{Error, Result};
pub use exec::Execution;
