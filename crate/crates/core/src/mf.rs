//! Matched-filter detectors and norm-based band significance.
//!
//! A detector is the classic linear matched filter: weights
//! w = kappa * K^-1 (d - m) with kappa chosen so the response on the
//! target itself is exactly 1. Weight magnitudes are then turned into
//! per-band significance scores by combining them with the centered band
//! norms; bands whose significance stays near zero across many targets
//! carry no usable signal.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cube::{BandStats, HyperspectralCube};
use crate::error::{Error, Result};
use crate::linalg::{fixed_dot, CovarianceModel};

/// Matched-filter detector for a single target signature.
#[derive(Debug, Clone)]
pub struct MfDetector {
    weights: Vec<f64>,
    kappa: f64,
    target: Vec<f64>,
    mean: Vec<f64>,
}

impl MfDetector {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn bands(&self) -> usize {
        self.weights.len()
    }
}

/// Detector output plane with the scaling it was produced under.
#[derive(Debug, Clone)]
pub struct MfOutput {
    pub values: Vec<f64>,
    pub lines: usize,
    pub samples: usize,
    pub kappa: f64,
}

/// How weight magnitudes combine with band norms into significance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// |w_j| multiplied by the centered band norm. Invariant under any
    /// positive per-band rescaling of the data; the default.
    NormWeighted,
    /// |w_j| divided by the centered band norm, constant bands mapped to
    /// zero. Kept selectable for comparison runs.
    PaperLiteral,
}

impl Convention {
    pub fn as_str(self) -> &'static str {
        match self {
            Convention::NormWeighted => "norm-weighted",
            Convention::PaperLiteral => "paper-literal",
        }
    }
}

impl FromStr for Convention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "norm-weighted" => Ok(Convention::NormWeighted),
            "paper-literal" => Ok(Convention::PaperLiteral),
            other => Err(format!(
                "unknown convention '{other}' (expected 'norm-weighted' or 'paper-literal')"
            )),
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-band significance derived from one detector's weights.
#[derive(Debug, Clone)]
pub struct NmfSignificance {
    pub values: Vec<f64>,
    pub convention: Convention,
}

fn l2(v: &[f64]) -> f64 {
    fixed_dot(v, v).sqrt()
}

/// Builds the matched filter for target signature `d` against background
/// mean `m` using the covariance model's factorization.
pub fn mf_detector(model: &CovarianceModel, m: &[f64], d: &[f64]) -> Result<MfDetector> {
    let l = model.bands();
    if m.len() != l {
        return Err(Error::DimensionMismatch {
            context: "mean vector length".into(),
            expected: l,
            actual: m.len(),
        });
    }
    if d.len() != l {
        return Err(Error::DimensionMismatch {
            context: "target signature length".into(),
            expected: l,
            actual: d.len(),
        });
    }
    if m.iter().chain(d.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("detector inputs".into()));
    }
    let diff: Vec<f64> = d.iter().zip(m).map(|(di, mi)| di - mi).collect();
    if l2(&diff) <= 1e-12 * l2(m) {
        return Err(Error::DegenerateTarget);
    }
    let solved = model.solve(&diff)?;
    let quad = fixed_dot(&diff, &solved);
    if !quad.is_finite() || quad <= 0.0 {
        return Err(Error::NumericFailure(format!(
            "target quadratic form is {quad:e}, expected positive"
        )));
    }
    let kappa = 1.0 / quad;
    let weights = solved.iter().map(|v| v * kappa).collect();
    Ok(MfDetector {
        weights,
        kappa,
        target: d.to_vec(),
        mean: m.to_vec(),
    })
}

const APPLY_CHUNK: usize = 8192;

/// Applies the detector to every pixel as a weighted sum of band planes.
/// Each output value accumulates over bands in ascending order, so the
/// plane is identical for any thread count.
pub fn mf_apply(det: &MfDetector, cube: &HyperspectralCube) -> Result<MfOutput> {
    check_bands(det, cube)?;
    let mut values = vec![0.0; cube.pixels()];
    values
        .par_chunks_mut(APPLY_CHUNK)
        .enumerate()
        .for_each(|(chunk_idx, out)| {
            let start = chunk_idx * APPLY_CHUNK;
            for band in 0..det.bands() {
                let w = det.weights[band];
                let m = det.mean[band];
                let src = &cube.plane(band)[start..start + out.len()];
                for (o, &v) in out.iter_mut().zip(src) {
                    *o += w * (v - m);
                }
            }
        });
    Ok(MfOutput {
        values,
        lines: cube.lines(),
        samples: cube.samples(),
        kappa: det.kappa,
    })
}

/// Reference route: the same output computed as an explicit per-pixel dot
/// product over the spectrum.
pub fn mf_apply_per_pixel(det: &MfDetector, cube: &HyperspectralCube) -> Result<MfOutput> {
    check_bands(det, cube)?;
    let values: Vec<f64> = (0..cube.pixels())
        .into_par_iter()
        .map(|p| {
            let mut acc = 0.0;
            for band in 0..det.bands() {
                acc += det.weights[band] * (cube.plane(band)[p] - det.mean[band]);
            }
            acc
        })
        .collect();
    Ok(MfOutput {
        values,
        lines: cube.lines(),
        samples: cube.samples(),
        kappa: det.kappa,
    })
}

fn check_bands(det: &MfDetector, cube: &HyperspectralCube) -> Result<()> {
    if det.bands() != cube.bands() {
        return Err(Error::DimensionMismatch {
            context: "detector band count".into(),
            expected: cube.bands(),
            actual: det.bands(),
        });
    }
    Ok(())
}

/// Converts detector weights into per-band significance values.
pub fn nmf_significance(
    det: &MfDetector,
    stats: &BandStats,
    convention: Convention,
) -> Result<NmfSignificance> {
    if stats.bands() != det.bands() {
        return Err(Error::DimensionMismatch {
            context: "band statistics length".into(),
            expected: det.bands(),
            actual: stats.bands(),
        });
    }
    let values = det
        .weights
        .iter()
        .enumerate()
        .map(|(j, &w)| match convention {
            Convention::NormWeighted => w.abs() * stats.centered_norms[j],
            Convention::PaperLiteral => {
                if stats.constant_bands[j] {
                    0.0
                } else {
                    w.abs() / stats.centered_norms[j]
                }
            }
        })
        .collect();
    Ok(NmfSignificance {
        values,
        convention,
    })
}
