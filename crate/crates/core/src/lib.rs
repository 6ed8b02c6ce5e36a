//! Depth-constrained bathymetric survey autonomy.
//!
//! * [`gp`]: streaming Gaussian-process depth model.
//! * [`geometry`]: polygon predicates and boundary primitives.
//! * [`contour`]: target-depth contour and boundary tracing controller.
//! * [`coverage`]: monotone partition and lawnmower coverage planning.
//! * [`sim`]: synthetic seafloor, vessel and end-to-end mission runner.

pub mod contour;
pub mod coverage;
pub mod geometry;
pub mod gp;
pub mod sim;
