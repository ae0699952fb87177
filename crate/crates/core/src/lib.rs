//! Feature cross search with a maximum-AUC objective.
//!
//! For a set of categorical columns `A`, the best achievable AUC of any scorer on the cross
//! `X_A` is `auc*(A) = ½ + ½ d_TV(P₁ᴬ × P₀ᴬ, P₀ᴬ × P₁ᴬ)`, where `Pᵢᴬ` is the distribution of
//! `X_A` given label `i`. When columns are conditionally independent given the label, the
//! normalized objective `F(A) = 2·auc*(A) − 1` is monotone submodular, and greedy selection
//! is within `1 − 1/e` of the best `k`-subset.
//!
//! Modules:
//! - [`measures`]: finite measures, products, total variation, involutions.
//! - [`score_dist`]: log-likelihood-ratio score laws and AUC from them.
//! - [`nb_model`]: the naive Bayes objective `F(A)`.
//! - [`joint_eval`]: exact evaluation on arbitrary joint tables.
//! - [`selector`]: greedy, lazy greedy and exhaustive maximization.
//! - [`hardgen`]: densest-subgraph reduction instances.
//! - [`theory_lab`]: numeric checks of the structural lemmas behind submodularity.
//! - [`ingest`]: CSV ingestion and frequency estimation.

pub mod error;
pub mod hardgen;
pub mod ingest;
pub mod joint_eval;
pub mod mass;
pub mod measures;
pub mod nb_model;
pub mod score_dist;
pub mod selector;
pub mod synth;
pub mod theory_lab;

pub use error::{Error, Result};
pub use mass::{Exact, Mass, Mode};
pub use measures::{Involution, Measure, ProductMeasure, Token};
pub use nb_model::{ColumnModel, ConditionalPair, NbObjective};
pub use score_dist::{AucValue, ConvolveConfig, ScoreDistribution};
pub use selector::{SearchReport, SelectionMethod, SelectorConfig, SetObjective};
