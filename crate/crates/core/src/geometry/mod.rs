//! Pointwise characteristic geometry of planar metrics.

mod characteristic;
mod curve;

pub use characteristic::{
    char_frames, characteristic_residual, classify_hole, ergosphere_null_covector, ergosphere_on_ray,
    forward_time_root, gordon_inner_range, inner_boundary_condition, spatial_null_covectors, time_root_at_null, Family,
    FrameField, FramePair, HoleClass, HoleKind, InnerCondition, NullDirectionPair, TOL_CHAR, TOL_ERGO,
};
pub(crate) use characteristic::{cross, dot, Block};
pub use curve::ClosedCurve;
