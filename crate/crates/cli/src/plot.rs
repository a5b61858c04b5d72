//! Hand-emitted static SVG plots: the per-band MAV spectrum and the
//! sweep of selection counts over target counts. No drawing library,
//! just well-formed markup with a provenance block in <desc>.

use badbands::detector::SweepTable;

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 34.0;
const BOTTOM: f64 = 52.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn plot_width() -> f64 {
    WIDTH - LEFT - RIGHT
}

fn plot_height() -> f64 {
    HEIGHT - TOP - BOTTOM
}

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Rounds to three significant digits so tick labels stay short.
fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let scale = 10f64.powi(2 - v.abs().log10().floor() as i32);
    (v * scale).round() / scale
}

fn open_svg(title: &str, desc: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <title>{}</title>\n<desc>{}</desc>\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n",
        escape(title),
        escape(desc)
    )
}

fn axes(out: &mut String, x_label: &str, y_label: &str) {
    let x0 = LEFT;
    let x1 = WIDTH - RIGHT;
    let y0 = HEIGHT - BOTTOM;
    let y1 = TOP;
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label),
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label),
    ));
}

enum YScale {
    Linear { max: f64 },
    Log { floor: f64, cap: f64 },
}

impl YScale {
    fn pos(&self, v: f64) -> f64 {
        let frac = match self {
            YScale::Linear { max } => (v / max).clamp(0.0, 1.0),
            YScale::Log { floor, cap } => {
                let v = v.max(*floor);
                (v.ln() - floor.ln()) / (cap.ln() - floor.ln())
            }
        };
        HEIGHT - BOTTOM - frac * plot_height()
    }

    fn ticks(&self) -> Vec<f64> {
        match self {
            YScale::Linear { max } => (0..=5).map(|k| round_sig(max * k as f64 / 5.0)).collect(),
            YScale::Log { floor, cap } => {
                let lo = floor.log10().ceil() as i32;
                let hi = cap.log10().floor() as i32;
                (lo..=hi).map(|e| 10f64.powi(e)).collect()
            }
        }
    }
}

fn y_scale(values: &[f64], threshold: Option<f64>, log_y: bool) -> YScale {
    let positives: Vec<f64> = values
        .iter()
        .copied()
        .chain(threshold)
        .filter(|v| *v > 0.0)
        .collect();
    if log_y && !positives.is_empty() {
        let lo = positives.iter().copied().fold(f64::MAX, f64::min);
        let hi = positives.iter().copied().fold(0.0f64, f64::max);
        return YScale::Log {
            floor: lo / 2.0,
            cap: hi * 2.0,
        };
    }
    let hi = positives.iter().copied().fold(0.0f64, f64::max);
    YScale::Linear {
        max: if hi > 0.0 { hi * 1.05 } else { 1.0 },
    }
}

fn draw_y_ticks(out: &mut String, scale: &YScale) {
    for tick in scale.ticks() {
        let y = scale.pos(tick);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            LEFT - 4.0,
            LEFT,
            LEFT - 7.0,
            y + 4.0,
            tick
        ));
    }
}

/// The MAV spectrum with the threshold line, selected-band markers and
/// optional shading of the header's own bad band list for comparison.
pub fn mav_svg(
    mav: &[f64],
    threshold: f64,
    selected: &[usize],
    reference_bbl: Option<&[bool]>,
    log_y: bool,
    provenance: &str,
) -> String {
    let bands = mav.len();
    let x_pos = |band: usize| {
        if bands == 1 {
            LEFT + plot_width() / 2.0
        } else {
            LEFT + (band - 1) as f64 / (bands - 1) as f64 * plot_width()
        }
    };
    let scale = y_scale(mav, Some(threshold), log_y);

    let mut out = open_svg(
        &format!("MAV spectrum, {} of {} bands selected", selected.len(), bands),
        provenance,
    );

    if let Some(bbl) = reference_bbl {
        let slot = plot_width() / bands.max(1) as f64;
        for (i, usable) in bbl.iter().enumerate() {
            if !usable {
                let cx = x_pos(i + 1);
                out.push_str(&format!(
                    "<rect x=\"{:.2}\" y=\"{TOP}\" width=\"{:.2}\" height=\"{:.2}\" \
                     fill=\"#f4d7d7\"/>\n",
                    (cx - slot / 2.0).max(LEFT),
                    slot.min(WIDTH - RIGHT - (cx - slot / 2.0).max(LEFT)),
                    plot_height()
                ));
            }
        }
    }

    axes(&mut out, "band", "MAV");
    draw_y_ticks(&mut out, &scale);
    let step = (bands / 10).max(1);
    for band in (1..=bands).step_by(step) {
        let x = x_pos(band);
        out.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{band}</text>\n",
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 4.0,
            HEIGHT - BOTTOM + 18.0
        ));
    }

    let ty = scale.pos(threshold);
    out.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{ty:.2}\" x2=\"{}\" y2=\"{ty:.2}\" stroke=\"#d62728\" \
         stroke-dasharray=\"6 4\"/>\n\
         <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#d62728\">thres = {}</text>\n",
        WIDTH - RIGHT,
        WIDTH - RIGHT - 4.0,
        ty - 5.0,
        threshold
    ));

    let points: Vec<String> = mav
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{:.2},{:.2}", x_pos(i + 1), scale.pos(v)))
        .collect();
    out.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
        points.join(" ")
    ));
    for &band in selected {
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#d62728\"/>\n",
            x_pos(band),
            scale.pos(mav[band - 1])
        ));
    }

    out.push_str("</svg>\n");
    out
}

/// Mean selected-band count against the target count (log x), one line
/// per threshold, with one-sigma whiskers where repeats allow.
pub fn sweep_svg(table: &SweepTable, provenance: &str) -> String {
    let usable: Vec<_> = table.summaries.iter().filter(|s| s.runs > 0).collect();
    let mut thresholds: Vec<f64> = Vec::new();
    for s in &usable {
        if !thresholds.contains(&s.threshold) {
            thresholds.push(s.threshold);
        }
    }
    let (m_lo, m_hi) = usable.iter().fold((f64::MAX, 1.0f64), |(lo, hi), s| {
        (lo.min(s.targets as f64), hi.max(s.targets as f64))
    });
    let y_hi = usable
        .iter()
        .fold(1.0f64, |hi, s| hi.max(s.mean + s.std_dev))
        * 1.05;

    let x_pos = |m: f64| {
        if m_hi <= m_lo {
            LEFT + plot_width() / 2.0
        } else {
            LEFT + (m.log10() - m_lo.log10()) / (m_hi.log10() - m_lo.log10()) * plot_width()
        }
    };
    let y_pos = |v: f64| HEIGHT - BOTTOM - (v / y_hi).clamp(0.0, 1.0) * plot_height();

    let mut out = open_svg("selected bands vs sampled targets", provenance);
    axes(&mut out, "targets (log scale)", "selected bands");

    for k in 0..=5 {
        let v = round_sig(y_hi * k as f64 / 5.0);
        let y = y_pos(v);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{LEFT}\" y2=\"{y:.2}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{v}</text>\n",
            LEFT - 4.0,
            LEFT - 7.0,
            y + 4.0
        ));
    }
    if usable.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let mut decade = 10f64.powi(m_lo.log10().ceil() as i32);
    let mut x_ticks = vec![m_lo];
    while decade <= m_hi {
        if decade > m_lo {
            x_ticks.push(decade);
        }
        decade *= 10.0;
    }
    for &m in &x_ticks {
        let x = x_pos(m);
        out.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{m}</text>\n",
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 4.0,
            HEIGHT - BOTTOM + 18.0
        ));
    }

    for (ti, &thres) in thresholds.iter().enumerate() {
        let color = PALETTE[ti % PALETTE.len()];
        let series: Vec<_> = usable.iter().filter(|s| s.threshold == thres).collect();
        for s in &series {
            if s.std_dev > 0.0 {
                let x = x_pos(s.targets as f64);
                out.push_str(&format!(
                    "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
                     stroke=\"{color}\" stroke-width=\"0.8\"/>\n",
                    y_pos(s.mean - s.std_dev),
                    y_pos(s.mean + s.std_dev)
                ));
            }
        }
        let points: Vec<String> = series
            .iter()
            .map(|s| format!("{:.2},{:.2}", x_pos(s.targets as f64), y_pos(s.mean)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            points.join(" ")
        ));
        let ly = TOP + 16.0 * ti as f64 + 6.0;
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>\n\
             <text x=\"{}\" y=\"{}\">thres {thres}</text>\n",
            WIDTH - RIGHT - 150.0,
            WIDTH - RIGHT - 120.0,
            WIDTH - RIGHT - 114.0,
            ly + 4.0
        ));
    }

    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use badbands::detector::{SweepCell, SweepSummary};

    #[test]
    fn mav_plot_is_well_formed_and_escapes_provenance() {
        let svg = mav_svg(
            &[5.0, 0.2, 4.0],
            1.0,
            &[2],
            None,
            false,
            "badbands detect --input <x & y>.hdr",
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;x &amp; y&gt;"));
        assert!(svg.contains("thres = 1"));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn bbl_shading_draws_one_rect_per_marked_band() {
        let svg = mav_svg(
            &[5.0, 0.2, 4.0, 0.1],
            1.0,
            &[],
            Some(&[true, false, true, false]),
            false,
            "p",
        );
        assert_eq!(svg.matches("fill=\"#f4d7d7\"").count(), 2);
    }

    #[test]
    fn log_scale_survives_zero_values() {
        let svg = mav_svg(&[0.0, 10.0, 1000.0], 5.0, &[1], None, true, "p");
        assert!(svg.contains("<polyline"));
        assert!(!svg.contains("NaN"));
        assert!(!svg.contains("inf"));
    }

    #[test]
    fn sweep_plot_has_a_legend_entry_per_threshold() {
        let summaries = vec![
            SweepSummary { targets: 10, threshold: 1.0, runs: 3, mean: 4.0, std_dev: 0.5 },
            SweepSummary { targets: 100, threshold: 1.0, runs: 3, mean: 5.0, std_dev: 0.4 },
            SweepSummary { targets: 10, threshold: 2.0, runs: 3, mean: 7.0, std_dev: 0.2 },
            SweepSummary { targets: 100, threshold: 2.0, runs: 3, mean: 7.5, std_dev: 0.1 },
            SweepSummary { targets: 9999, threshold: 2.0, runs: 0, mean: 0.0, std_dev: 0.0 },
        ];
        let table = SweepTable {
            cells: Vec::<SweepCell>::new(),
            summaries,
        };
        let svg = sweep_svg(&table, "p");
        assert!(svg.contains("thres 1"));
        assert!(svg.contains("thres 2"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn tick_rounding_keeps_three_significant_digits() {
        assert_eq!(round_sig(0.123456), 0.123);
        assert_eq!(round_sig(987654.0), 988000.0);
        assert_eq!(round_sig(0.0), 0.0);
    }
}
