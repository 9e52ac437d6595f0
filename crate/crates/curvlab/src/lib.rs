//! Curvature of left-invariant metrics on compact Lie groups and on spectral
//! truncations of Sobolev mapping groups, with regularized Ricci traces.

pub mod config;
pub mod engine;
pub mod error;
pub mod lie;
pub mod ricci;
pub mod scalar;
pub mod sobolev;
pub mod spectral;
pub mod symbol;

pub use error::{CurvError, Result};
pub use scalar::Real;

/// Double-precision instantiations.
pub type LieAlgebra = lie::LieAlgebraData<f64>;
pub type GroupModel = sobolev::TruncatedGroupModel<f64>;
pub type ConfigurationF64 = config::Configuration<f64>;
pub type Symbol = symbol::HomogeneousSymbol<f64>;
pub type Trig = symbol::TrigPoly<f64>;

/// Single-precision instantiations.
pub type LieAlgebraF32 = lie::LieAlgebraData<f32>;
pub type GroupModelF32 = sobolev::TruncatedGroupModel<f32>;
pub type SymbolF32 = symbol::HomogeneousSymbol<f32>;
