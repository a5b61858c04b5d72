//! Synthetic cubes with known-bad bands, plus detection scoring.
//!
//! Two generators: a small three-band scene with a bright square target
//! (band 2 pure noise), and a configurable cube where a smooth material
//! spectrum is modulated per pixel and selected band ranges are replaced
//! by dead, low-SNR or pure-noise faults. Both return the ground truth
//! alongside the cube so detection output can be scored.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cube::{centralize, compute_band_stats, HyperspectralCube};
use crate::detector::BadBandReport;
use crate::error::{Error, Result};
use crate::linalg::covariance;
use crate::mf::{mf_detector, nmf_significance, Convention, MfDetector, NmfSignificance};
use crate::rng::{derive_seed, SplitMix64};

/// Stream tag for per-pixel abundance draws.
const ABUNDANCE_TAG: u64 = 0x4142_554E;
/// Stream tag prefix for per-band noise draws.
const BAND_TAG: u64 = 0x4241_4E44;

/// Inclusive 1-based band range, written as "a-b" or a single "a".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandRange {
    pub lo: usize,
    pub hi: usize,
}

impl BandRange {
    pub fn contains(&self, band: usize) -> bool {
        self.lo <= band && band <= self.hi
    }
}

impl fmt::Display for BandRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}-{}", self.lo, self.hi)
        }
    }
}

impl FromStr for BandRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("invalid band range {s:?}"));
        let (lo, hi) = match s.split_once('-') {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let v = s.trim().parse().map_err(|_| bad())?;
                (v, v)
            }
        };
        if lo == 0 || hi < lo {
            return Err(bad());
        }
        Ok(BandRange { lo, hi })
    }
}

impl Serialize for BandRange {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BandRange {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What replaces the clean signal on a faulted band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultKind {
    /// Every sample pinned to one value.
    Dead { value: f64 },
    /// Attenuated signal under strong noise.
    LowSnr { signal_scale: f64, noise_scale: f64 },
    /// No signal at all.
    PureNoise { noise_scale: f64 },
}

/// One faulted band range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectedFault {
    pub bands: BandRange,
    #[serde(flatten)]
    pub kind: FaultKind,
}

/// Recipe for a synthetic cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub lines: usize,
    pub samples: usize,
    pub bands: usize,
    pub seed: u64,
    #[serde(default = "default_base_amplitude")]
    pub base_amplitude: f64,
    #[serde(default = "default_clean_noise_scale")]
    pub clean_noise_scale: f64,
    pub faults: Vec<InjectedFault>,
}

fn default_base_amplitude() -> f64 {
    200.0
}

fn default_clean_noise_scale() -> f64 {
    1.0
}

impl SyntheticSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SyntheticSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("bad cube recipe: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lines == 0 || self.samples == 0 || self.bands == 0 {
            return Err(Error::InvalidArgument(
                "cube dimensions must be at least 1".into(),
            ));
        }
        if !self.base_amplitude.is_finite() || self.base_amplitude <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "base amplitude must be finite and positive, got {}",
                self.base_amplitude
            )));
        }
        if !self.clean_noise_scale.is_finite() || self.clean_noise_scale < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "clean noise scale must be finite and nonnegative, got {}",
                self.clean_noise_scale
            )));
        }
        let mut covered = vec![false; self.bands];
        for fault in &self.faults {
            let r = fault.bands;
            if r.hi > self.bands {
                return Err(Error::InvalidArgument(format!(
                    "fault range {r} exceeds the {} bands",
                    self.bands
                )));
            }
            for band in r.lo..=r.hi {
                if covered[band - 1] {
                    return Err(Error::InvalidArgument(format!(
                        "band {band} is covered by more than one fault"
                    )));
                }
                covered[band - 1] = true;
            }
            let positive = |name: &str, v: f64| -> Result<()> {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "{name} must be finite and positive, got {v}"
                    )));
                }
                Ok(())
            };
            match fault.kind {
                FaultKind::Dead { value } => {
                    if !value.is_finite() {
                        return Err(Error::InvalidArgument(format!(
                            "dead band value must be finite, got {value}"
                        )));
                    }
                }
                FaultKind::LowSnr {
                    signal_scale,
                    noise_scale,
                } => {
                    positive("signal scale", signal_scale)?;
                    positive("noise scale", noise_scale)?;
                }
                FaultKind::PureNoise { noise_scale } => positive("noise scale", noise_scale)?,
            }
        }
        Ok(())
    }

    /// The stock benchmark: 40x40x60 cube with bands 20-25 replaced by
    /// pure unit noise.
    pub fn benchmark(seed: u64) -> Self {
        SyntheticSpec {
            lines: 40,
            samples: 40,
            bands: 60,
            seed,
            base_amplitude: default_base_amplitude(),
            clean_noise_scale: default_clean_noise_scale(),
            faults: vec![InjectedFault {
                bands: BandRange { lo: 20, hi: 25 },
                kind: FaultKind::PureNoise { noise_scale: 1.0 },
            }],
        }
    }
}

/// Smooth two-bump material spectrum on [0, 1], one amplitude per band.
pub fn base_spectrum(bands: usize) -> Vec<f64> {
    (0..bands)
        .map(|j| {
            let x = if bands == 1 {
                0.0
            } else {
                j as f64 / (bands - 1) as f64
            };
            let bump = |center: f64, width: f64| (-((x - center) / width).powi(2)).exp();
            0.4 + 0.8 * bump(0.3, 0.25) + 0.6 * bump(0.7, 0.2)
        })
        .collect()
}

/// 51x51x3 scene: unit noise everywhere, a 3x3 square of 255.0 at the
/// center of bands 1 and 3. Band 2 is noise only. Returns the cube and
/// the target pixel indices.
pub fn gen_figure1_cube(seed: u64) -> (HyperspectralCube, Vec<usize>) {
    const SIDE: usize = 51;
    let pixels = SIDE * SIDE;
    let mut rng = SplitMix64::new(seed);
    let mut planes: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..pixels).map(|_| rng.next_normal()).collect())
        .collect();
    let mut targets = Vec::with_capacity(9);
    for row in 24..=26 {
        for col in 24..=26 {
            let p = row * SIDE + col;
            planes[0][p] = 255.0;
            planes[2][p] = 255.0;
            targets.push(p);
        }
    }
    let cube = HyperspectralCube::new(SIDE, SIDE, planes).expect("generated planes are valid");
    (cube, targets)
}

/// Builds a cube from a recipe. Clean bands carry the base spectrum
/// scaled per pixel by a random abundance in [0.5, 1.5) plus background
/// noise; faulted bands are replaced per their fault kind. Returns the
/// cube and the sorted 1-based indices of all faulted bands.
pub fn gen_injected_cube(spec: &SyntheticSpec) -> Result<(HyperspectralCube, Vec<usize>)> {
    spec.validate()?;
    let pixels = spec.lines * spec.samples;
    let base = base_spectrum(spec.bands);

    let mut abundance_rng = SplitMix64::new(derive_seed(spec.seed, &[ABUNDANCE_TAG]));
    let abundance: Vec<f64> = (0..pixels).map(|_| 0.5 + abundance_rng.next_f64()).collect();

    let mut truth = Vec::new();
    let mut planes = Vec::with_capacity(spec.bands);
    for band in 1..=spec.bands {
        let mut rng = SplitMix64::new(derive_seed(spec.seed, &[BAND_TAG, band as u64]));
        let amp = spec.base_amplitude * base[band - 1];
        let fault = spec.faults.iter().find(|f| f.bands.contains(band));
        let plane: Vec<f64> = match fault.map(|f| f.kind) {
            None => abundance
                .iter()
                .map(|a| amp * a + spec.clean_noise_scale * rng.next_normal())
                .collect(),
            Some(FaultKind::Dead { value }) => vec![value; pixels],
            Some(FaultKind::LowSnr {
                signal_scale,
                noise_scale,
            }) => abundance
                .iter()
                .map(|a| signal_scale * amp * a + noise_scale * rng.next_normal())
                .collect(),
            Some(FaultKind::PureNoise { noise_scale }) => {
                (0..pixels).map(|_| noise_scale * rng.next_normal()).collect()
            }
        };
        if fault.is_some() {
            truth.push(band);
        }
        planes.push(plane);
    }
    truth.sort_unstable();
    let cube = HyperspectralCube::new(spec.lines, spec.samples, planes)?;
    Ok((cube, truth))
}

/// Matched filter and significance for a target defined as the mean of
/// the given pixels, against the cube's own background statistics.
pub fn target_area_significance(
    cube: &HyperspectralCube,
    target_pixels: &[usize],
    convention: Convention,
) -> Result<(MfDetector, NmfSignificance)> {
    if target_pixels.is_empty() {
        return Err(Error::InvalidArgument("no target pixels given".into()));
    }
    let stats = compute_band_stats(cube);
    let centered = centralize(cube, &stats)?;
    let model = covariance(&centered)?;
    let mut d = vec![0.0; cube.bands()];
    for &p in target_pixels {
        let spectrum = centered.pixel_spectrum(p)?;
        for (acc, v) in d.iter_mut().zip(&spectrum) {
            *acc += v;
        }
    }
    for v in d.iter_mut() {
        *v /= target_pixels.len() as f64;
    }
    let zero = vec![0.0; cube.bands()];
    let detector = mf_detector(&model, &zero, &d)?;
    let significance = nmf_significance(&detector, &stats, convention)?;
    Ok((detector, significance))
}

/// Confusion counts and derived rates for a detection against truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    /// Set when nothing was selected, in which case precision defaults
    /// to 1.
    pub no_predictions: bool,
}

/// Scores selected bands against the true bad set (both 1-based).
pub fn score_detection(report: &BadBandReport, truth: &[usize]) -> DetectionScore {
    let bands = report.mav.values.len();
    let selected: HashSet<usize> = report.selected_bands.iter().copied().collect();
    let truth: HashSet<usize> = truth.iter().copied().collect();
    let mut tp = 0;
    let mut fp = 0;
    let mut fused = 0;
    let mut tn = 0;
    for band in 1..=bands {
        match (selected.contains(&band), truth.contains(&band)) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fused += 1,
            (false, false) => tn += 1,
        }
    }
    let no_predictions = tp + fp == 0;
    let precision = if no_predictions {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fused == 0 {
        1.0
    } else {
        tp as f64 / (tp + fused) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    DetectionScore {
        precision,
        recall,
        f1,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fused,
        true_negatives: tn,
        no_predictions,
    }
}

/// Threshold suggestion: the midpoint of the widest relative gap between
/// consecutive positive MAV values. None when fewer than two distinct
/// positive values exist.
pub fn gap_threshold(mav: &[f64]) -> Option<f64> {
    let mut positive: Vec<f64> = mav.iter().copied().filter(|v| *v > 0.0).collect();
    positive.sort_by(|a, b| a.total_cmp(b));
    if positive.len() < 2 {
        return None;
    }
    let mut best_gap = 0.0;
    let mut best_pair = None;
    for pair in positive.windows(2) {
        let gap = (pair[1] - pair[0]) / pair[1];
        if gap > best_gap {
            best_gap = gap;
            best_pair = Some((pair[0], pair[1]));
        }
    }
    best_pair.map(|(a, b)| (a + b) / 2.0)
}
