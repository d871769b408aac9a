//! Class-prior estimation from positive and unlabeled data when the
//! positive sample is contaminated with negatives.
//!
//! Two estimators recover the canonical pair `(α*, β*)`: the proportion of
//! positives among unlabeled data and the purity of the labeled sample.
//! [`msgmm`] fits two Gaussian mixtures that share their components;
//! [`alphamax`] estimates the maximum proportions `(α⁺, β⁺)` of each sample
//! in the other and maps them through [`measures::correction`]. The
//! [`transform`] module reduces multivariate data to a prior-preserving
//! score, and [`measures`] holds exact computations on discrete measures
//! used as test oracles.

pub mod alphamax;
pub mod datagen;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod math;
pub mod measures;
pub mod msgmm;
pub mod rng;
pub mod transform;

pub use datagen::{PuDataset, Truth};
pub use error::{PuError, Result};
pub use estimate::{Method, PriorEstimate};
pub use measures::{correction, DiscreteMeasure, PriorPair};
pub use transform::{PosteriorParams, TransformedPU};
