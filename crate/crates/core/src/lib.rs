//! Hugoniot curves of hyperbolic conservation laws with a convex entropy,
//! and the shock admissibility and stability criteria evaluated along them:
//! Lax inequalities, the Lopatinski determinant, relative-entropy
//! monotonicity and entropy dissipation.

pub mod audit;
pub mod criteria;
pub mod error;
pub mod expr;
pub mod hugoniot;
pub mod model;
pub mod serialize;
pub mod spectral;
pub mod systems;
pub mod validate;

pub use error::{Error, Result};
pub use model::{
    ConditionFlags, ConditionReport, HugoniotCurve, HugoniotPoint, Matrix, Orientation,
    SharedModel, State, SystemModel,
};
