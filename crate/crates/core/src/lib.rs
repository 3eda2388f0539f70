//! Low-dimensional embeddings that factor out prior knowledge.
//!
//! Two routes are provided. [`run_jedi`] extends t-SNE: it minimizes
//! `KL(P || Q) - JS(P' || Q)`, staying close to the data affinities `P`
//! while moving away from the prior affinities `P'`. [`confetti_apply`]
//! works on distances instead and returns an adjusted metric that any
//! embedder accepting a precomputed matrix can use. The neighborhood overlap
//! score in [`evaluation`] measures how much of each structure an embedding
//! keeps.

pub mod affinity;
pub mod cli;
pub mod confetti;
pub mod datagen;
pub mod divergence;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod matrix;
pub mod optimizer;

pub use affinity::{
    calibrate_conditional, joint_affinity, lowdim_affinity, symmetrize, ConditionalAffinity,
    JointAffinity, LowDimAffinity,
};
pub use confetti::{
    confetti_apply, confetti_uninformative_check, slle_inverse_adjust, ConfettiParams, SlleParams,
    UninformativeReport,
};
pub use datagen::{gen_main, gen_tuning, SynthDataset};
pub use divergence::{
    jedi_objective_and_gradient, kl_divergence, pjsd, pjsd_bound, pjsd_gradient, tsne_gradient,
    GradientField, JediParams,
};
pub use error::{Error, Result};
pub use evaluation::{area_between, knn_sets, nos_distance, nos_label, NosCurve};
pub use matrix::{
    labels_to_distance, normalize_max, pairwise_euclidean, validate_metric, DataMatrix,
    DistanceMatrix, LabelVector, ValidationReport,
};
pub use optimizer::{init_embedding, run_jedi, run_tsne, Embedding, OptimizerConfig, RunTrace};
