//! Standard tractor bundle in a chosen scale.

pub mod field;
pub mod ops;
pub mod value;

pub use field::TractorField;
pub use ops::{
    box_k, box_k_local, parallel_defect, robin_local, thomas_d, thomas_d_local, tractor_connection,
    tractor_curvature_defect, yamabe_box, yamabe_box_local, BoxKOutput,
};
pub use value::{rescale_tractor, tractor_metric, TractorValue};
