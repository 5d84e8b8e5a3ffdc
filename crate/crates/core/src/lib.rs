//! Phase-field brittle fracture: unified crack-density models, 1D analytic
//! solutions, a staggered Q4 finite-element solver and closed-form failure
//! stress estimates.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic1d;
pub mod error;
pub mod failure;
pub mod fem;
pub mod io;
pub mod material;
pub mod mesh;
pub mod model;
pub mod solver;
pub mod sparse;
pub mod split;

pub use error::{Error, Result};
pub use material::{AnalysisMode, Lame, MaterialParams};
pub use mesh::{CrackSpec, Mesh, SeamSide};
pub use model::{CrackDensity, ModelConfig, ScalarField1D};
