//! Differentially private estimation for generalized linear models: noisy
//! gradient descent, noisy iterative hard thresholding, the mechanisms they
//! are built from, and a score-attack harness for auditing estimators.

pub mod dp_gd;
pub mod dp_iht;
pub mod error;
pub mod experiments;
pub mod glm;
pub mod mechanisms;
pub mod score_attack;
pub mod stats;

pub use dp_gd::{fit_low_dim, recommend_gd_config, FitResult, GdConfig};
pub use dp_iht::{fit_sparse_glm, noisy_iht, recommend_iht_config, IhtConfig, IhtRecipe, SparseFitResult};
pub use error::{Error, Result};
pub use glm::{
    clamped_gradient, default_truncation, negative_log_likelihood, Dataset, DesignBounds, FamilyKind, GlmFamily,
    NormKind, ParamVector,
};
pub use mechanisms::{PrivacyBudget, RngStream};
pub use score_attack::{run_attack_experiment, AttackReport};
