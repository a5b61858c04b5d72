//! Serialization of detection and sweep results to JSON and CSV.
//!
//! Every JSON artifact embeds enough provenance to reproduce it: tool
//! version, a canonical command line, the input content hash and the
//! seed. The command line deliberately omits --threads and --out since
//! neither changes report content.

use badbands::detector::{BadBandReport, SweepTable};
use badbands::synth::{DetectionScore, SyntheticSpec};
use serde::Serialize;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn range_label(range: (usize, usize)) -> String {
    if range.0 == range.1 {
        range.0.to_string()
    } else {
        format!("{}-{}", range.0, range.1)
    }
}

/// Everything a detection run reports, in a fixed key order.
#[derive(Debug, Serialize)]
pub struct JsonReport {
    pub tool_version: String,
    pub reproduce_command: String,
    pub input: String,
    pub input_sha256: String,
    pub seed: u64,
    pub targets: usize,
    pub convention: String,
    pub ridge_applied: f64,
    pub constant_bands: Vec<usize>,
    pub noise_injection_seed: Option<u64>,
    pub degenerate: bool,
    pub threshold: f64,
    pub selected_bands: Vec<usize>,
    pub ranges: Vec<String>,
    pub mav: Vec<f64>,
    pub skipped_targets: usize,
}

impl JsonReport {
    pub fn new(
        reproduce_command: String,
        input: String,
        input_sha256: String,
        report: &BadBandReport,
    ) -> Self {
        JsonReport {
            tool_version: TOOL_VERSION.to_string(),
            reproduce_command,
            input,
            input_sha256,
            seed: report.mav.seed,
            targets: report.mav.targets,
            convention: report.mav.convention.to_string(),
            ridge_applied: report.ridge_applied,
            constant_bands: report.constant_bands.clone(),
            noise_injection_seed: report.noise_injection_seed,
            degenerate: report.degenerate,
            threshold: report.threshold,
            selected_bands: report.selected_bands.clone(),
            ranges: report.ranges.iter().map(|&r| range_label(r)).collect(),
            mav: report.mav.values.clone(),
            skipped_targets: report.mav.skipped_targets,
        }
    }
}

/// Rows of report.csv: one line per band.
pub fn report_csv(report: &BadBandReport, wavelengths: Option<&[f64]>) -> String {
    let mut out = String::from("band,wavelength,mav,selected\n");
    for (i, &mav) in report.mav.values.iter().enumerate() {
        let band = i + 1;
        let wavelength = wavelengths
            .and_then(|w| w.get(i))
            .map(|v| v.to_string())
            .unwrap_or_default();
        let selected = u8::from(report.selected_bands.binary_search(&band).is_ok());
        out.push_str(&format!("{band},{wavelength},{mav},{selected}\n"));
    }
    out
}

/// The sensitivity sweep as JSON, cells and summaries together.
#[derive(Debug, Serialize)]
pub struct SweepFile {
    pub tool_version: String,
    pub reproduce_command: String,
    pub input: String,
    pub input_sha256: String,
    pub seed: u64,
    pub convention: String,
    pub repeats: usize,
    pub thresholds: Vec<f64>,
    pub m_grid: Vec<usize>,
    pub cells: Vec<SweepCellRow>,
    pub summaries: Vec<SweepSummaryRow>,
}

#[derive(Debug, Serialize)]
pub struct SweepCellRow {
    pub m: usize,
    pub thres: f64,
    pub repeat: usize,
    pub n_selected: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct SweepSummaryRow {
    pub m: usize,
    pub thres: f64,
    pub runs: usize,
    pub mean: f64,
    pub std_dev: f64,
}

pub fn sweep_rows(table: &SweepTable) -> (Vec<SweepCellRow>, Vec<SweepSummaryRow>) {
    let cells = table
        .cells
        .iter()
        .map(|c| SweepCellRow {
            m: c.targets,
            thres: c.threshold,
            repeat: c.repeat,
            n_selected: c.selected,
        })
        .collect();
    let summaries = table
        .summaries
        .iter()
        .map(|s| SweepSummaryRow {
            m: s.targets,
            thres: s.threshold,
            runs: s.runs,
            mean: s.mean,
            std_dev: s.std_dev,
        })
        .collect();
    (cells, summaries)
}

/// Rows of sweep.csv; skipped cells leave n_selected empty.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("M,thres,repeat,n_selected\n");
    for cell in &table.cells {
        let n = cell
            .selected
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{n}\n",
            cell.targets, cell.threshold, cell.repeat
        ));
    }
    out
}

/// Ground truth companion file for generated cubes.
#[derive(Debug, Serialize)]
pub struct TruthFile {
    pub tool_version: String,
    pub reproduce_command: String,
    pub generator: String,
    pub seed: u64,
    /// 1-based indices of the known-bad bands.
    pub truth: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_pixels: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<SyntheticSpec>,
}

/// Scoring result for a simulated detection.
#[derive(Debug, Serialize)]
pub struct ScoreFile {
    pub tool_version: String,
    pub reproduce_command: String,
    pub seed: u64,
    pub targets: usize,
    pub convention: String,
    pub threshold: f64,
    /// "gap" when the harness heuristic picked it, "explicit" for --thres.
    pub threshold_source: String,
    pub selected_bands: Vec<usize>,
    pub ranges: Vec<String>,
    pub truth: Vec<usize>,
    pub score: DetectionScore,
}

impl ScoreFile {
    pub fn new(
        reproduce_command: String,
        threshold_source: &str,
        report: &BadBandReport,
        truth: Vec<usize>,
        score: DetectionScore,
    ) -> Self {
        ScoreFile {
            tool_version: TOOL_VERSION.to_string(),
            reproduce_command,
            seed: report.mav.seed,
            targets: report.mav.targets,
            convention: report.mav.convention.to_string(),
            threshold: report.threshold,
            threshold_source: threshold_source.to_string(),
            selected_bands: report.selected_bands.clone(),
            ranges: report.ranges.iter().map(|&r| range_label(r)).collect(),
            truth,
            score,
        }
    }
}

/// Pretty JSON with a trailing newline, fully deterministic.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("report types always serialize");
    text.push('\n');
    text.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use badbands::detector::{threshold_bands, MavSpectrum};
    use badbands::mf::Convention;

    fn sample_report() -> BadBandReport {
        let mav = MavSpectrum {
            values: vec![0.5, 9.0, 0.25, 8.0],
            targets: 7,
            skipped_targets: 1,
            seed: 99,
            convention: Convention::NormWeighted,
        };
        let mut report = threshold_bands(&mav, 0.5).unwrap();
        report.ridge_applied = 0.125;
        report.constant_bands = vec![3];
        report.noise_injection_seed = Some(11);
        report
    }

    #[test]
    fn json_keys_appear_in_contract_order() {
        let json = String::from_utf8(to_json_bytes(&JsonReport::new(
            "badbands detect --input x.hdr --thres 0.5".into(),
            "x.hdr".into(),
            "abc123".into(),
            &sample_report(),
        )))
        .unwrap();
        let keys = [
            "tool_version",
            "reproduce_command",
            "input",
            "input_sha256",
            "seed",
            "targets",
            "convention",
            "ridge_applied",
            "constant_bands",
            "noise_injection_seed",
            "degenerate",
            "threshold",
            "selected_bands",
            "ranges",
            "mav",
            "skipped_targets",
        ];
        let positions: Vec<usize> = keys
            .iter()
            .map(|k| json.find(&format!("\"{k}\"")).unwrap_or_else(|| panic!("missing {k}")))
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert!(json.contains("\"ranges\": [\n    \"1\",\n    \"3\"\n  ]"));
    }

    #[test]
    fn report_csv_lists_every_band() {
        let csv = report_csv(&sample_report(), Some(&[0.4, 0.5, 0.6, 0.7]));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "band,wavelength,mav,selected");
        assert_eq!(lines[1], "1,0.4,0.5,1");
        assert_eq!(lines[2], "2,0.5,9,0");
        assert_eq!(lines.len(), 5);

        let no_wavelengths = report_csv(&sample_report(), None);
        assert!(no_wavelengths.lines().nth(1).unwrap().starts_with("1,,0.5,"));
    }

    #[test]
    fn sweep_csv_leaves_skipped_cells_empty() {
        use badbands::detector::{SweepCell, SweepSummary, SweepTable};
        let table = SweepTable {
            cells: vec![
                SweepCell {
                    targets: 5,
                    threshold: 1.5,
                    repeat: 0,
                    selected: Some(3),
                },
                SweepCell {
                    targets: 9999,
                    threshold: 1.5,
                    repeat: 0,
                    selected: None,
                },
            ],
            summaries: vec![SweepSummary {
                targets: 5,
                threshold: 1.5,
                runs: 1,
                mean: 3.0,
                std_dev: 0.0,
            }],
        };
        let csv = sweep_csv(&table);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "M,thres,repeat,n_selected");
        assert_eq!(lines[1], "5,1.5,0,3");
        assert_eq!(lines[2], "9999,1.5,0,");
    }

    #[test]
    fn range_labels_collapse_singletons() {
        assert_eq!(range_label((4, 4)), "4");
        assert_eq!(range_label((20, 25)), "20-25");
    }
}
