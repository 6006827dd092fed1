//! Exact finite-depth analysis of rank-one cutting-and-stacking
//! constructions: towers and their index sets, symbolic words, odometers,
//! level-set measures, and checkers for cyclic factors, odometer factors and
//! odometer isomorphism.

pub mod criteria;
pub mod error;
pub mod measure;
pub mod odometer;
pub mod presets;
pub mod rational;
pub mod tower;
pub mod words;

pub use error::{Error, Result};
pub use tower::{CuttingSpacerSpec, FormulaRule, IndexSet, ParameterSource, ResidueHistogram, Stage};
