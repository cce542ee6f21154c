//! Spatiotemporal operators over temporal points: restriction to a
//! spatiotemporal box, "ever within distance" tests, and the time intervals a
//! moving point spends inside a region.

mod clip;
mod distance;
mod intervals;

use thiserror::Error;

pub use crate::temporal::TimeInterval;
pub use clip::tpoint_at_stbox;
pub use distance::{edwithin, min_dist_moving_point_segment};
pub use intervals::at_geometry_intervals;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StOpsError {
    #[error("distance threshold must be a non-negative number, got {0}")]
    NegativeDistance(f64),
    #[error("motion interval is empty: t0 = {t0}, t1 = {t1}")]
    DegenerateMotion { t0: f64, t1: f64 },
    #[error("operation is not defined for point geometries")]
    UnsupportedGeometry,
}
