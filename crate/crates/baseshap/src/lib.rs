//! Game-theoretic attribution and baseline-value learning.
//!
//! The crate treats a model (a parsed arithmetic expression or a small MLP)
//! together with an input sample and a baseline vector as a cooperative game
//! `v(S) = transform(f(mask(x, S)))` over subsets of input variables. On top
//! of that game it computes Shapley values (exact and permutation-sampled),
//! multi-variate interactions, multi-order Shapley components, order spectra
//! and context saliency, and it learns baseline vectors by penalizing
//! low-order interaction strength with projected gradient descent.

pub mod attribution;
pub mod error;
pub mod expr;
pub mod game;
pub mod learn;
pub mod mlp;
pub mod rng;
pub mod sum;
pub mod synth;

pub use attribution::{AttributionReport, InteractionTable, Method, OrderSpectrum};
pub use error::{Error, Result};
pub use expr::{ExprGraph, GradResult};
pub use game::{Backend, BaselineVector, Coalition, GameSpec, Transform};
pub use learn::{Init, LearnConfig, LearnState, LossKind};
pub use mlp::{Dataset, MlpModel};
pub use synth::SynthFunction;
