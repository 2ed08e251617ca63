//! Spectral clustering with the LLPD kernel.

pub mod eigen;
pub mod embed;
pub mod operator;
pub mod pipeline;
pub mod sweep;

pub use eigen::{dense_smallest, dense_smallest_values, smallest_eigenpairs, EigenConfig, EigenPairs, SymmetricOperator};
pub use embed::{cluster_embedding, embed, kmeans, AssignMethod, KMeansResult, SpectralEmbedding};
pub use operator::{dense_laplacian, KernelConfig, LlpdLaplacianOperator, Spectrum};
pub use pipeline::{
    euclidean_spectral_clustering, kmeans_baseline, llpd_spectral_clustering, run, ClusterConfig, ClusterOutcome,
    ClusterReport, Method, PipelineDiagnostics, EUCLIDEAN_DENSE_CUTOFF, SINGLE_CLUSTER_LAMBDA_2,
};
pub use sweep::{estimate_k_sigma, linear_grid, llpd_diameter_scale, sigma_for_k, sigma_sweep, SigmaGridSpec, SigmaSweep};
