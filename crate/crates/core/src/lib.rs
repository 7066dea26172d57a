//! Image processing for deep-space optical navigation.
//!
//! The flight chain runs from an 8-bit sky-field image to identified
//! beacon line-of-sight:
//!
//! 1. [`centroiding`]: dynamic threshold, connected regions, weighted
//!    moments.
//! 2. [`star_id`]: search-less star identification over the k-vector
//!    indexed pair database of [`star_catalog`].
//! 3. [`attitude_solver`]: SVD solution of Wahba's problem inside a RANSAC
//!    consensus on principal rotation axes.
//! 4. [`beacon_detection`]: predicted beacon projection, its propagated
//!    covariance, and nearest-spike selection inside the 3-sigma ellipse.
//!
//! [`renderer`], [`ephemeris`] and [`harness`] provide synthetic scenes and
//! the Monte Carlo evaluation around it.

pub mod attitude_solver;
pub mod beacon_detection;
pub mod centroiding;
pub mod ephemeris;
pub mod geometry;
pub mod harness;
pub mod pipeline;
pub mod renderer;
pub mod star_catalog;
pub mod star_id;

pub use nalgebra;

/// Astronomical unit in km.
pub const AU_KM: f64 = 1.495_978_707e8;

/// Radians per arcsecond.
pub const ARCSEC: f64 = std::f64::consts::PI / (180.0 * 3600.0);
