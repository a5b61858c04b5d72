//! In-memory hyperspectral cube and first-order band statistics.
//!
//! Cubes are stored band-major: one contiguous plane of `lines * samples`
//! doubles per band, regardless of the on-disk interleave. Every algorithm
//! step downstream consumes whole bands, so this is the layout everything
//! else assumes. Cubes are immutable once constructed.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// An L-band image cube with optional wavelength and band-name metadata.
#[derive(Debug, Clone)]
pub struct HyperspectralCube {
    lines: usize,
    samples: usize,
    planes: Vec<Vec<f64>>,
    wavelengths: Option<Vec<f64>>,
    band_names: Option<Vec<String>>,
}

impl HyperspectralCube {
    /// Builds a cube from band planes, validating geometry and finiteness.
    pub fn new(lines: usize, samples: usize, planes: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_metadata(lines, samples, planes, None, None)
    }

    pub fn with_metadata(
        lines: usize,
        samples: usize,
        planes: Vec<Vec<f64>>,
        wavelengths: Option<Vec<f64>>,
        band_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if lines == 0 || samples == 0 {
            return Err(Error::InvalidArgument(format!(
                "cube geometry must be at least 1x1, got {lines}x{samples}"
            )));
        }
        if planes.is_empty() {
            return Err(Error::InvalidArgument("cube needs at least one band".into()));
        }
        let pixels = lines * samples;
        for (band, plane) in planes.iter().enumerate() {
            if plane.len() != pixels {
                return Err(Error::DimensionMismatch {
                    context: format!("plane length of band {}", band + 1),
                    expected: pixels,
                    actual: plane.len(),
                });
            }
        }
        if let Some(bad) = planes
            .par_iter()
            .enumerate()
            .find_map_first(|(band, plane)| {
                plane
                    .iter()
                    .position(|v| !v.is_finite())
                    .map(|pixel| (band, pixel))
            })
        {
            return Err(Error::NonFinite(format!(
                "band {}, pixel {}",
                bad.0 + 1,
                bad.1
            )));
        }
        if let Some(w) = &wavelengths {
            if w.len() != planes.len() {
                return Err(Error::DimensionMismatch {
                    context: "wavelength list".into(),
                    expected: planes.len(),
                    actual: w.len(),
                });
            }
            if let Some(v) = w.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("wavelength {v}")));
            }
        }
        if let Some(n) = &band_names {
            if n.len() != planes.len() {
                return Err(Error::DimensionMismatch {
                    context: "band name list".into(),
                    expected: planes.len(),
                    actual: n.len(),
                });
            }
        }
        Ok(HyperspectralCube {
            lines,
            samples,
            planes,
            wavelengths,
            band_names,
        })
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn bands(&self) -> usize {
        self.planes.len()
    }

    pub fn pixels(&self) -> usize {
        self.lines * self.samples
    }

    /// Immutable view of one band plane. Panics if `band` is out of range;
    /// use [`HyperspectralCube::bands`] to stay in bounds.
    pub fn plane(&self, band: usize) -> &[f64] {
        &self.planes[band]
    }

    pub fn planes(&self) -> &[Vec<f64>] {
        &self.planes
    }

    pub fn wavelengths(&self) -> Option<&[f64]> {
        self.wavelengths.as_deref()
    }

    pub fn band_names(&self) -> Option<&[String]> {
        self.band_names.as_deref()
    }

    /// The full spectrum of one pixel, band order preserved.
    pub fn pixel_spectrum(&self, index: usize) -> Result<Vec<f64>> {
        if index >= self.pixels() {
            return Err(Error::PixelOutOfRange {
                index,
                count: self.pixels(),
            });
        }
        Ok(self.planes.iter().map(|plane| plane[index]).collect())
    }

    /// New cube with the same geometry and metadata but different planes.
    pub fn with_planes(&self, planes: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_metadata(
            self.lines,
            self.samples,
            planes,
            self.wavelengths.clone(),
            self.band_names.clone(),
        )
    }
}

/// Per-band first-order statistics.
#[derive(Debug, Clone)]
pub struct BandStats {
    /// Arithmetic mean of each band.
    pub means: Vec<f64>,
    /// Euclidean norm of each band after mean removal.
    pub centered_norms: Vec<f64>,
    /// Population variance of each band (norm squared over pixel count).
    pub variances: Vec<f64>,
    /// True where the band holds a single repeated value.
    pub constant_bands: Vec<bool>,
}

impl BandStats {
    pub fn bands(&self) -> usize {
        self.means.len()
    }
}

/// Neumaier-compensated sum; fixed left-to-right order, bit-reproducible.
pub(crate) fn compensated_sum<I: Iterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Computes means, centered norms, variances and constant flags for every
/// band. Constant bands are detected by exact value comparison so their
/// norm is exactly zero rather than a rounding residue.
pub fn compute_band_stats(cube: &HyperspectralCube) -> BandStats {
    let n = cube.pixels() as f64;
    let per_band: Vec<(f64, f64, f64, bool)> = cube
        .planes()
        .par_iter()
        .map(|plane| {
            let first = plane[0];
            if plane.iter().all(|&v| v == first) {
                return (first, 0.0, 0.0, true);
            }
            let mean = compensated_sum(plane.iter().copied()) / n;
            let sum_sq = compensated_sum(plane.iter().map(|&v| {
                let c = v - mean;
                c * c
            }));
            (mean, sum_sq.max(0.0).sqrt(), sum_sq / n, false)
        })
        .collect();

    let mut stats = BandStats {
        means: Vec::with_capacity(per_band.len()),
        centered_norms: Vec::with_capacity(per_band.len()),
        variances: Vec::with_capacity(per_band.len()),
        constant_bands: Vec::with_capacity(per_band.len()),
    };
    for (mean, norm, var, constant) in per_band {
        stats.means.push(mean);
        stats.centered_norms.push(norm);
        stats.variances.push(var);
        stats.constant_bands.push(constant);
    }
    stats
}

/// Subtracts each band's mean. Constant bands come out exactly zero.
pub fn centralize(cube: &HyperspectralCube, stats: &BandStats) -> Result<HyperspectralCube> {
    if stats.bands() != cube.bands() {
        return Err(Error::DimensionMismatch {
            context: "band statistics".into(),
            expected: cube.bands(),
            actual: stats.bands(),
        });
    }
    let planes: Vec<Vec<f64>> = cube
        .planes()
        .par_iter()
        .enumerate()
        .map(|(band, plane)| {
            if stats.constant_bands[band] {
                vec![0.0; plane.len()]
            } else {
                let mean = stats.means[band];
                plane.iter().map(|&v| v - mean).collect()
            }
        })
        .collect();
    cube.with_planes(planes)
}
