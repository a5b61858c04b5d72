//! End-to-end bad band detection.
//!
//! The pipeline: flag constant bands and replace them with seeded noise so
//! the covariance stays invertible, centralize, factor the covariance,
//! build a matched filter for each of M randomly sampled target pixels,
//! convert each filter's weights to band significance, average the
//! absolute values (the MAV spectrum), and select every band whose MAV is
//! at or below the threshold. Also hosts the M/threshold sensitivity
//! sweep built on the same machinery.

use rayon::prelude::*;

use crate::cube::{centralize, compute_band_stats, BandStats, HyperspectralCube};
use crate::error::{Error, Result};
use crate::linalg::{covariance, CovarianceModel};
use crate::mf::{mf_detector, nmf_significance, Convention};
use crate::rng::{derive_seed, SplitMix64};

/// Stream tag for the preflight noise seed derivation.
const PREFLIGHT_TAG: u64 = 0x5052_4546;

/// A without-replacement sample of target pixel indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSample {
    pub indices: Vec<usize>,
    pub seed: u64,
}

/// Incremental without-replacement sampler (partial Fisher-Yates over the
/// pixel index pool). The first M draws are exactly the indices
/// [`sample_targets`] returns for the same (N, M, seed); further draws
/// extend the same permutation, which is how degenerate targets get
/// replaced deterministically.
struct TargetSampler {
    pool: Vec<usize>,
    drawn: usize,
    rng: SplitMix64,
}

impl TargetSampler {
    fn new(population: usize, seed: u64) -> Self {
        TargetSampler {
            pool: (0..population).collect(),
            drawn: 0,
            rng: SplitMix64::new(seed),
        }
    }

    fn draw(&mut self) -> Option<usize> {
        let remaining = self.pool.len() - self.drawn;
        if remaining == 0 {
            return None;
        }
        let j = self.drawn + self.rng.below(remaining as u64) as usize;
        self.pool.swap(self.drawn, j);
        let v = self.pool[self.drawn];
        self.drawn += 1;
        Some(v)
    }
}

/// Draws `m` distinct pixel indices uniformly from `[0, population)`.
pub fn sample_targets(population: usize, m: usize, seed: u64) -> Result<TargetSample> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "target count must be at least 1".into(),
        ));
    }
    if m > population {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {m} distinct targets from {population} pixels"
        )));
    }
    let mut sampler = TargetSampler::new(population, seed);
    let indices = (0..m).map(|_| sampler.draw().unwrap()).collect();
    Ok(TargetSample { indices, seed })
}

/// Per-band mean absolute significance across M sampled targets.
#[derive(Debug, Clone, PartialEq)]
pub struct MavSpectrum {
    pub values: Vec<f64>,
    pub targets: usize,
    /// Degenerate draws that had to be replaced.
    pub skipped_targets: usize,
    pub seed: u64,
    pub convention: Convention,
}

/// Result of the constant-band preflight.
#[derive(Debug, Clone)]
pub struct PreflightOutcome {
    pub cube: HyperspectralCube,
    /// 0-based indices of bands that were constant.
    pub constant_bands: Vec<usize>,
    /// Seed of the injected noise streams.
    pub noise_seed: u64,
}

/// Flags constant bands and replaces each with zero-mean unit-variance
/// noise drawn from a per-band stream derived from `seed`, so the
/// covariance stays invertible. Flagged bands are force-reported as bad
/// downstream no matter what their injected noise scores.
pub fn preflight_constant_bands(
    cube: &HyperspectralCube,
    stats: &BandStats,
    seed: u64,
) -> PreflightOutcome {
    assert_eq!(
        stats.bands(),
        cube.bands(),
        "band statistics do not match the cube"
    );
    let constant_bands: Vec<usize> = (0..cube.bands())
        .filter(|&b| stats.constant_bands[b])
        .collect();
    let planes: Vec<Vec<f64>> = cube
        .planes()
        .par_iter()
        .enumerate()
        .map(|(band, plane)| {
            if stats.constant_bands[band] {
                let mut rng = SplitMix64::new(derive_seed(seed, &[band as u64]));
                (0..plane.len()).map(|_| rng.next_normal()).collect()
            } else {
                plane.clone()
            }
        })
        .collect();
    let cube = cube
        .with_planes(planes)
        .expect("noise planes preserve the cube geometry");
    PreflightOutcome {
        cube,
        constant_bands,
        noise_seed: seed,
    }
}

/// Shared state for MAV computations: the centered cube, its band stats
/// and the factored covariance. Building it once lets a sweep reuse the
/// expensive parts across cells; the per-cell seed only drives sampling.
pub struct MavEngine {
    centered: HyperspectralCube,
    stats: BandStats,
    model: CovarianceModel,
    zero_mean: Vec<f64>,
}

impl MavEngine {
    pub fn new(cube: &HyperspectralCube) -> Result<Self> {
        let stats = compute_band_stats(cube);
        let centered = centralize(cube, &stats)?;
        let model = covariance(&centered)?;
        let zero_mean = vec![0.0; cube.bands()];
        Ok(MavEngine {
            centered,
            stats,
            model,
            zero_mean,
        })
    }

    pub fn ridge_applied(&self) -> f64 {
        self.model.ridge_applied()
    }

    pub fn stats(&self) -> &BandStats {
        &self.stats
    }

    fn significance_of(&self, pixel: usize, convention: Convention) -> Result<Option<Vec<f64>>> {
        let d = self.centered.pixel_spectrum(pixel)?;
        match mf_detector(&self.model, &self.zero_mean, &d) {
            Ok(det) => Ok(Some(nmf_significance(&det, &self.stats, convention)?.values)),
            Err(Error::DegenerateTarget) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Mean absolute significance over `m` sampled targets. Degenerate
    /// draws (pixels equal to the mean) are replaced from the same
    /// deterministic stream and counted in `skipped_targets`.
    pub fn mav(&self, m: usize, seed: u64, convention: Convention) -> Result<MavSpectrum> {
        let n = self.centered.pixels();
        if m == 0 {
            return Err(Error::InvalidArgument(
                "target count must be at least 1".into(),
            ));
        }
        if m > n {
            return Err(Error::InvalidArgument(format!(
                "cannot sample {m} distinct targets from {n} pixels"
            )));
        }
        let mut sampler = TargetSampler::new(n, seed);
        let initial: Vec<usize> = (0..m).map(|_| sampler.draw().unwrap()).collect();
        let first_pass: Vec<Option<Vec<f64>>> = initial
            .par_iter()
            .map(|&p| self.significance_of(p, convention))
            .collect::<Result<Vec<_>>>()?;

        let mut skipped = 0usize;
        let mut acc = vec![0.0; self.centered.bands()];
        for slot in first_pass {
            let column = match slot {
                Some(column) => column,
                None => {
                    skipped += 1;
                    loop {
                        let Some(p) = sampler.draw() else {
                            return Err(Error::NumericFailure(
                                "ran out of pixels while replacing degenerate targets".into(),
                            ));
                        };
                        match self.significance_of(p, convention)? {
                            Some(column) => break column,
                            None => skipped += 1,
                        }
                    }
                }
            };
            for (a, v) in acc.iter_mut().zip(&column) {
                *a += v;
            }
        }
        let values = acc.into_iter().map(|s| s / m as f64).collect();
        Ok(MavSpectrum {
            values,
            targets: m,
            skipped_targets: skipped,
            seed,
            convention,
        })
    }

    /// Mean absolute significance over an explicit set of pixels, for
    /// probing a known target area. Degenerate pixels are an error here;
    /// there is no pool to replace them from.
    pub fn mav_of_pixels(&self, pixels: &[usize], convention: Convention) -> Result<Vec<f64>> {
        if pixels.is_empty() {
            return Err(Error::InvalidArgument("no target pixels given".into()));
        }
        let columns: Vec<Vec<f64>> = pixels
            .par_iter()
            .map(|&p| {
                self.significance_of(p, convention)?
                    .ok_or(Error::DegenerateTarget)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut acc = vec![0.0; self.centered.bands()];
        for column in &columns {
            for (a, v) in acc.iter_mut().zip(column) {
                *a += v;
            }
        }
        Ok(acc.into_iter().map(|s| s / pixels.len() as f64).collect())
    }
}

/// One-shot MAV spectrum; see [`MavEngine::mav`].
pub fn mav_spectrum(
    cube: &HyperspectralCube,
    m: usize,
    seed: u64,
    convention: Convention,
) -> Result<MavSpectrum> {
    MavEngine::new(cube)?.mav(m, seed, convention)
}

/// Full detection result.
#[derive(Debug, Clone, PartialEq)]
pub struct BadBandReport {
    pub threshold: f64,
    /// 1-based band indices with MAV at or below the threshold.
    pub selected_bands: Vec<usize>,
    /// Maximal runs of consecutive selected bands, 1-based inclusive.
    pub ranges: Vec<(usize, usize)>,
    pub mav: MavSpectrum,
    pub ridge_applied: f64,
    /// 1-based indices of preflighted constant bands.
    pub constant_bands: Vec<usize>,
    pub noise_injection_seed: Option<u64>,
    /// True when every band was constant and the whole MAV run happened
    /// on injected noise.
    pub degenerate: bool,
}

/// Groups sorted 1-based indices into maximal consecutive runs.
pub fn band_ranges(selected: &[usize]) -> Vec<(usize, usize)> {
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    for &band in selected {
        match ranges.last_mut() {
            Some((_, hi)) if *hi + 1 == band => *hi = band,
            _ => ranges.push((band, band)),
        }
    }
    ranges
}

/// Selects bands with MAV at or below `threshold` (inclusive).
pub fn threshold_bands(mav: &MavSpectrum, threshold: f64) -> Result<BadBandReport> {
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "threshold must be finite and nonnegative, got {threshold}"
        )));
    }
    let selected_bands: Vec<usize> = mav
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v <= threshold)
        .map(|(j, _)| j + 1)
        .collect();
    let ranges = band_ranges(&selected_bands);
    Ok(BadBandReport {
        threshold,
        selected_bands,
        ranges,
        mav: mav.clone(),
        ridge_applied: 0.0,
        constant_bands: Vec::new(),
        noise_injection_seed: None,
        degenerate: false,
    })
}

/// Inputs of a detection run.
#[derive(Debug, Clone)]
pub struct DetectParams {
    pub targets: usize,
    pub seed: u64,
    pub convention: Convention,
    pub threshold: f64,
}

/// Runs the whole pipeline on a cube. Constant bands are force-included
/// in the selection: their reported MAV is pinned to 0 so the selection
/// rule stays exactly "MAV at or below threshold".
pub fn detect(cube: &HyperspectralCube, params: &DetectParams) -> Result<BadBandReport> {
    let stats = compute_band_stats(cube);
    let noise_seed = derive_seed(params.seed, &[PREFLIGHT_TAG]);
    let preflight = preflight_constant_bands(cube, &stats, noise_seed);
    let engine = MavEngine::new(&preflight.cube)?;
    let mut mav = engine.mav(params.targets, params.seed, params.convention)?;
    for &band in &preflight.constant_bands {
        mav.values[band] = 0.0;
    }
    let mut report = threshold_bands(&mav, params.threshold)?;
    report.ridge_applied = engine.ridge_applied();
    report.constant_bands = preflight.constant_bands.iter().map(|b| b + 1).collect();
    report.noise_injection_seed = if preflight.constant_bands.is_empty() {
        None
    } else {
        Some(noise_seed)
    };
    report.degenerate = preflight.constant_bands.len() == cube.bands();
    Ok(report)
}

/// Inputs of a sensitivity sweep.
#[derive(Debug, Clone)]
pub struct SweepParams {
    pub m_grid: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    pub convention: Convention,
}

/// One (M, threshold, repeat) cell; `selected` is None when the cell was
/// skipped because M exceeds the pixel count.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub targets: usize,
    pub threshold: f64,
    pub repeat: usize,
    pub selected: Option<usize>,
}

/// Mean and spread of the selected-band count over a cell's repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub targets: usize,
    pub threshold: f64,
    pub runs: usize,
    pub mean: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
    pub summaries: Vec<SweepSummary>,
}

/// The per-cell seed: derived from the sweep seed and the cell key, so
/// cells are independent and each one can be reproduced in isolation with
/// a plain detection run.
pub fn sweep_cell_seed(seed: u64, m: usize, thres_index: usize, repeat_index: usize) -> u64 {
    derive_seed(seed, &[m as u64, thres_index as u64, repeat_index as u64])
}

/// The target-count grid used when none is given: unit steps to 10, tens
/// to 100, hundreds to 1000, thousands to 10000.
pub fn default_m_grid() -> Vec<usize> {
    let mut grid: Vec<usize> = (1..=10).collect();
    grid.extend((2..=10).map(|k| k * 10));
    grid.extend((2..=10).map(|k| k * 100));
    grid.extend((2..=10).map(|k| k * 1000));
    grid
}

/// Runs the selection count over the (M, threshold, repeat) grid. The
/// centered cube and covariance are shared across cells; only sampling
/// differs per cell. Cells run in parallel and land in a fixed order.
pub fn sensitivity_sweep(cube: &HyperspectralCube, params: &SweepParams) -> Result<SweepTable> {
    if params.m_grid.is_empty() {
        return Err(Error::InvalidArgument("empty target-count grid".into()));
    }
    if params.m_grid.iter().any(|&m| m == 0) {
        return Err(Error::InvalidArgument(
            "target-count grid entries must be at least 1".into(),
        ));
    }
    if params.thresholds.is_empty() {
        return Err(Error::InvalidArgument("empty threshold list".into()));
    }
    if let Some(bad) = params
        .thresholds
        .iter()
        .find(|t| !t.is_finite() || **t < 0.0)
    {
        return Err(Error::InvalidArgument(format!(
            "thresholds must be finite and nonnegative, got {bad}"
        )));
    }
    if params.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }

    let stats = compute_band_stats(cube);
    let noise_seed = derive_seed(params.seed, &[PREFLIGHT_TAG]);
    let preflight = preflight_constant_bands(cube, &stats, noise_seed);
    let engine = MavEngine::new(&preflight.cube)?;
    let pixels = cube.pixels();

    let mut keys = Vec::new();
    for &m in &params.m_grid {
        for (ti, &t) in params.thresholds.iter().enumerate() {
            for r in 0..params.repeats {
                keys.push((m, ti, t, r));
            }
        }
    }

    let counts: Vec<Option<usize>> = keys
        .par_iter()
        .map(|&(m, ti, t, r)| {
            if m > pixels {
                return Ok(None);
            }
            let cell_seed = sweep_cell_seed(params.seed, m, ti, r);
            let mut mav = engine.mav(m, cell_seed, params.convention)?;
            for &band in &preflight.constant_bands {
                mav.values[band] = 0.0;
            }
            Ok(Some(mav.values.iter().filter(|v| **v <= t).count()))
        })
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<SweepCell> = keys
        .iter()
        .zip(&counts)
        .map(|(&(m, _, t, r), &selected)| SweepCell {
            targets: m,
            threshold: t,
            repeat: r,
            selected,
        })
        .collect();

    let mut summaries = Vec::new();
    for (gi, &m) in params.m_grid.iter().enumerate() {
        for (ti, &t) in params.thresholds.iter().enumerate() {
            let base = (gi * params.thresholds.len() + ti) * params.repeats;
            let runs: Vec<usize> = cells[base..base + params.repeats]
                .iter()
                .filter_map(|c| c.selected)
                .collect();
            let count = runs.len();
            let mean = if count == 0 {
                0.0
            } else {
                runs.iter().sum::<usize>() as f64 / count as f64
            };
            let std_dev = if count < 2 {
                0.0
            } else {
                let ss: f64 = runs
                    .iter()
                    .map(|&v| {
                        let d = v as f64 - mean;
                        d * d
                    })
                    .sum();
                (ss / (count - 1) as f64).sqrt()
            };
            summaries.push(SweepSummary {
                targets: m,
                threshold: t,
                runs: count,
                mean,
                std_dev,
            });
        }
    }

    Ok(SweepTable { cells, summaries })
}
