//! Coordinate charts, jet-valued fields, metric models and Riemannian curvature.

pub mod chart;
pub mod field;
pub mod geometry;
pub mod local;
pub mod metric;
pub mod tensor;

pub use chart::{Chart, ChartDomain};
pub use field::{DensityField, ScalarJetField, ScaleTag, DEFAULT_JET_ORDER};
pub use geometry::{curvature_pack, laplacian, levi_civita_apply, CurvaturePack, LocalGeometry};
pub use local::{LocalField, Slot, TensorField};
pub use metric::{MetricFamily, MetricModel};
pub use tensor::TensorValue;
