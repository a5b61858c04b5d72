//! Bad band detection for hyperspectral image cubes.
//!
//! Faulty sensor bands (dead, saturated or noise-dominated) poison
//! downstream target detection, and hand-maintained bad band lists age
//! badly. This crate finds them automatically: it builds matched filters
//! for a set of randomly sampled target pixels against the cube's own
//! background statistics, converts each filter's weights into per-band
//! significance, averages the absolute values into a MAV spectrum, and
//! selects every band whose MAV falls at or below a threshold. Bands
//! that carry no usable signal end up with near-zero weight in every
//! filter, so they sit at the bottom of the MAV spectrum regardless of
//! which targets were drawn.
//!
//! The main entry points are [`detect`] for a full run on a cube,
//! [`mav_spectrum`] for the raw spectrum, [`sensitivity_sweep`] for
//! mapping selection counts over a grid of sample sizes and thresholds,
//! and [`envi::load_cube`] / [`envi::save_cube`] for ENVI-format I/O.
//! Everything is deterministic given a seed, including parallel runs.

pub mod cube;
pub mod detector;
pub mod envi;
pub mod error;
pub mod linalg;
pub mod mf;
pub mod rng;
pub mod synth;

pub use cube::{centralize, compute_band_stats, BandStats, HyperspectralCube};
pub use detector::{
    detect, mav_spectrum, sensitivity_sweep, threshold_bands, BadBandReport, DetectParams,
    MavEngine, MavSpectrum, SweepParams, SweepTable,
};
pub use error::{Error, Result};
pub use linalg::{covariance, CovarianceModel};
pub use mf::{mf_apply, mf_detector, nmf_significance, Convention, MfDetector, MfOutput};
pub use synth::{gen_figure1_cube, gen_injected_cube, score_detection, SyntheticSpec};
