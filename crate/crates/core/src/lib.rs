//! Conformal tractor calculus on explicit model geometries.
//!
//! All derivatives are exact: fields are written over truncated Taylor jets
//! ([`jet::Jet`]) and every operator acts on jets, never on sampled values.

pub mod error;
pub mod jet;
pub mod fields_charts;
pub mod tractor;
pub mod hypersurface;
pub mod almost_einstein;
pub mod model_cone;
pub mod einstein_gjms;
pub mod decomposition;
pub mod dtn_model;
pub mod cli;

pub use error::{CalcError, Result};
