//! Automatic extraction of the annulus-sector geometry of convex ultrasound
//! images, scan-line linearisation and its inverse, and the measures used to
//! score them.
//!
//! The pipeline runs [`masking::extract_plane`] to isolate the imaging plane,
//! [`symmetry::locate_axis`] to find its vertical axis,
//! [`boundaries::detect_boundaries`] to fit the two radial boundaries, and
//! finally assembles an [`AnnulusSector`] in [`sector::extract`]. The sector
//! then drives [`resample::linearise`] and [`resample::invert`].
//!
//! All coordinates are `(row, col)` with rows growing downward from the
//! top-left pixel centre.

pub mod boundaries;
pub mod error;
pub mod masking;
pub mod metrics;
pub mod params;
pub mod raster;
pub mod resample;
pub mod sector;
pub mod symmetry;
pub mod synth;

pub use boundaries::RansacParams;
pub use error::{Error, Result};
pub use masking::{BinaryMask, PlaneMask};
pub use raster::{AnyImage, GrayImage, Point, Raster, RgbImage};
pub use resample::{Interpolation, LinearImage, LineariseOptions};
pub use sector::{extract, extract_gray, AnnulusSector, ExtractConfig, Extraction, Keypoints};
