//! Binary PGM (P5) export of a single band plane, stretched so the
//! plane's own min maps to black and its max to white.

pub fn band_to_pgm(plane: &[f64], samples: usize, lines: usize, comment: &str) -> Vec<u8> {
    let lo = plane.iter().copied().fold(f64::MAX, f64::min);
    let hi = plane.iter().copied().fold(f64::MIN, f64::max);
    let span = hi - lo;
    let comment: String = comment
        .chars()
        .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
        .collect();
    let mut out = format!("P5\n# {comment}\n{samples} {lines}\n255\n").into_bytes();
    out.extend(plane.iter().map(|&v| {
        if span > 0.0 {
            ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            128
        }
    }));
    out
}
