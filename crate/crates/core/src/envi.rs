//! ENVI header + raw binary cube reader and writer.
//!
//! The format is a plain-text `.hdr` file (`key = value` lines, lists in
//! braces, first line the literal `ENVI`) next to a raw binary payload in
//! BSQ, BIL or BIP interleave. Reading converts everything to the internal
//! band-major f64 layout; writing always emits little-endian bytes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::cube::HyperspectralCube;
use crate::error::{Error, Result};

/// Supported ENVI `data type` codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    U8,
    I16,
    I32,
    F32,
    F64,
    U16,
    U32,
}

impl DataType {
    pub fn from_code(code: u32) -> Option<DataType> {
        match code {
            1 => Some(DataType::U8),
            2 => Some(DataType::I16),
            3 => Some(DataType::I32),
            4 => Some(DataType::F32),
            5 => Some(DataType::F64),
            12 => Some(DataType::U16),
            13 => Some(DataType::U32),
            _ => None,
        }
    }

    pub fn code(self) -> u32 {
        match self {
            DataType::U8 => 1,
            DataType::I16 => 2,
            DataType::I32 => 3,
            DataType::F32 => 4,
            DataType::F64 => 5,
            DataType::U16 => 12,
            DataType::U32 => 13,
        }
    }

    pub fn size_bytes(self) -> usize {
        match self {
            DataType::U8 => 1,
            DataType::I16 | DataType::U16 => 2,
            DataType::I32 | DataType::U32 | DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DataType::U8 => "u8",
            DataType::I16 => "i16",
            DataType::I32 => "i32",
            DataType::F32 => "f32",
            DataType::F64 => "f64",
            DataType::U16 => "u16",
            DataType::U32 => "u32",
        }
    }
}

/// Raw binary layout of the payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interleave {
    Bsq,
    Bil,
    Bip,
}

impl Interleave {
    pub fn as_str(self) -> &'static str {
        match self {
            Interleave::Bsq => "bsq",
            Interleave::Bil => "bil",
            Interleave::Bip => "bip",
        }
    }
}

impl FromStr for Interleave {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bsq" => Ok(Interleave::Bsq),
            "bil" => Ok(Interleave::Bil),
            "bip" => Ok(Interleave::Bip),
            other => Err(format!("unknown interleave '{other}'")),
        }
    }
}

impl fmt::Display for Interleave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

impl ByteOrder {
    pub fn code(self) -> u32 {
        match self {
            ByteOrder::Little => 0,
            ByteOrder::Big => 1,
        }
    }
}

/// Parsed ENVI header. Unknown keys are carried through verbatim so a
/// parse/serialize cycle loses nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct EnviHeader {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub data_type: DataType,
    pub interleave: Interleave,
    pub byte_order: ByteOrder,
    pub header_offset: usize,
    pub wavelengths: Option<Vec<f64>>,
    pub band_names: Option<Vec<String>>,
    /// `bbl` field: true = usable band. Read for comparison plots only;
    /// the detector never consults it.
    pub bbl: Option<Vec<bool>>,
    /// Unrecognized keys in original order, with a flag marking brace lists.
    pub extra: Vec<(String, String, bool)>,
}

impl EnviHeader {
    /// Payload size in bytes the header implies, offset prefix included.
    pub fn expected_payload_len(&self) -> usize {
        self.samples * self.lines * self.bands * self.data_type.size_bytes()
            + self.header_offset
    }

    /// Renders the header with keys in a fixed canonical order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("ENVI\n");
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("samples", self.samples.to_string());
        push("lines", self.lines.to_string());
        push("bands", self.bands.to_string());
        push("header offset", self.header_offset.to_string());
        push("data type", self.data_type.code().to_string());
        push("interleave", self.interleave.as_str().to_string());
        push("byte order", self.byte_order.code().to_string());
        if let Some(w) = &self.wavelengths {
            let items: Vec<String> = w.iter().map(|v| v.to_string()).collect();
            push("wavelength", format!("{{ {} }}", items.join(", ")));
        }
        if let Some(names) = &self.band_names {
            push("band names", format!("{{ {} }}", names.join(", ")));
        }
        if let Some(bbl) = &self.bbl {
            let items: Vec<&str> = bbl.iter().map(|&b| if b { "1" } else { "0" }).collect();
            push("bbl", format!("{{ {} }}", items.join(", ")));
        }
        for (k, v, braced) in &self.extra {
            if *braced {
                push(k, format!("{{ {v} }}"));
            } else {
                push(k, v.clone());
            }
        }
        out
    }
}

struct RawEntry {
    key: String,
    value: String,
    line: usize,
    braced: bool,
}

fn normalize_key(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_ascii_lowercase()
}

fn scan_entries(text: &str) -> Result<Vec<RawEntry>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == "ENVI" => {}
        Some((_, first)) => {
            return Err(Error::HeaderParse {
                line: 1,
                message: format!("expected the ENVI signature, found '{}'", first.trim()),
            })
        }
        None => {
            return Err(Error::HeaderParse {
                line: 1,
                message: "empty header".into(),
            })
        }
    }

    let mut entries = Vec::new();
    while let Some((idx, line)) = lines.next() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(';') {
            continue;
        }
        let Some(eq) = trimmed.find('=') else {
            return Err(Error::HeaderParse {
                line: line_no,
                message: format!("expected 'key = value', found '{trimmed}'"),
            });
        };
        let key = normalize_key(&trimmed[..eq]);
        if key.is_empty() {
            return Err(Error::HeaderParse {
                line: line_no,
                message: "empty key before '='".into(),
            });
        }
        let after = trimmed[eq + 1..].trim();
        if let Some(rest) = after.strip_prefix('{') {
            let mut body = String::new();
            let mut chunk = rest;
            loop {
                if let Some(end) = chunk.find('}') {
                    if !chunk[end + 1..].trim().is_empty() {
                        return Err(Error::HeaderParse {
                            line: line_no,
                            message: format!(
                                "unexpected text after '}}' in the '{key}' list"
                            ),
                        });
                    }
                    body.push_str(&chunk[..end]);
                    break;
                }
                body.push_str(chunk);
                body.push(' ');
                match lines.next() {
                    Some((_, next)) => chunk = next,
                    None => {
                        return Err(Error::HeaderParse {
                            line: line_no,
                            message: format!("unterminated '{{' list for key '{key}'"),
                        })
                    }
                }
            }
            entries.push(RawEntry {
                key,
                value: body.trim().to_string(),
                line: line_no,
                braced: true,
            });
        } else {
            entries.push(RawEntry {
                key,
                value: after.to_string(),
                line: line_no,
                braced: false,
            });
        }
    }
    Ok(entries)
}

fn parse_count(entry: &RawEntry) -> Result<usize> {
    let v: usize = entry.value.parse().map_err(|_| Error::HeaderParse {
        line: entry.line,
        message: format!("'{}' is not a valid count for '{}'", entry.value, entry.key),
    })?;
    if v == 0 {
        return Err(Error::HeaderParse {
            line: entry.line,
            message: format!("'{}' must be at least 1", entry.key),
        });
    }
    Ok(v)
}

fn parse_float_list(entry: &RawEntry) -> Result<Vec<f64>> {
    entry
        .value
        .split(',')
        .map(|item| {
            item.trim().parse::<f64>().map_err(|_| Error::HeaderParse {
                line: entry.line,
                message: format!("'{}' in the '{}' list is not a number", item.trim(), entry.key),
            })
        })
        .collect()
}

/// Parses header text into an [`EnviHeader`]; diagnostics name the
/// offending line.
pub fn parse_envi_header(text: &str) -> Result<EnviHeader> {
    let entries = scan_entries(text)?;

    let find = |key: &str| entries.iter().rev().find(|e| e.key == key);
    let require = |key: &str| {
        find(key).ok_or_else(|| {
            Error::InvalidArgument(format!("header is missing the mandatory key '{key}'"))
        })
    };

    let samples = parse_count(require("samples")?)?;
    let lines = parse_count(require("lines")?)?;
    let bands = parse_count(require("bands")?)?;

    let dt_entry = require("data type")?;
    let dt_code: u32 = dt_entry.value.parse().map_err(|_| Error::HeaderParse {
        line: dt_entry.line,
        message: format!("'{}' is not a valid data type code", dt_entry.value),
    })?;
    let data_type = DataType::from_code(dt_code).ok_or_else(|| Error::HeaderParse {
        line: dt_entry.line,
        message: format!("unsupported data type {dt_code}"),
    })?;

    let il_entry = require("interleave")?;
    let interleave =
        Interleave::from_str(&il_entry.value).map_err(|message| Error::HeaderParse {
            line: il_entry.line,
            message,
        })?;

    let bo_entry = require("byte order")?;
    let byte_order = match bo_entry.value.trim() {
        "0" => ByteOrder::Little,
        "1" => ByteOrder::Big,
        other => {
            return Err(Error::HeaderParse {
                line: bo_entry.line,
                message: format!("byte order must be 0 or 1, found '{other}'"),
            })
        }
    };

    let header_offset = match find("header offset") {
        Some(entry) => entry.value.parse().map_err(|_| Error::HeaderParse {
            line: entry.line,
            message: format!("'{}' is not a valid header offset", entry.value),
        })?,
        None => 0,
    };

    let expect_len = |entry: &RawEntry, actual: usize| -> Result<()> {
        if actual != bands {
            return Err(Error::HeaderParse {
                line: entry.line,
                message: format!(
                    "'{}' lists {} entries but the header declares {} bands",
                    entry.key, actual, bands
                ),
            });
        }
        Ok(())
    };

    let wavelengths = match find("wavelength") {
        Some(entry) => {
            let list = parse_float_list(entry)?;
            expect_len(entry, list.len())?;
            Some(list)
        }
        None => None,
    };

    let band_names = match find("band names") {
        Some(entry) => {
            let names: Vec<String> =
                entry.value.split(',').map(|s| s.trim().to_string()).collect();
            expect_len(entry, names.len())?;
            Some(names)
        }
        None => None,
    };

    let bbl = match find("bbl") {
        Some(entry) => {
            let list = parse_float_list(entry)?;
            expect_len(entry, list.len())?;
            Some(list.into_iter().map(|v| v != 0.0).collect())
        }
        None => None,
    };

    const KNOWN: [&str; 10] = [
        "samples",
        "lines",
        "bands",
        "data type",
        "interleave",
        "byte order",
        "header offset",
        "wavelength",
        "band names",
        "bbl",
    ];
    let extra = entries
        .iter()
        .filter(|e| !KNOWN.contains(&e.key.as_str()))
        .map(|e| (e.key.clone(), e.value.clone(), e.braced))
        .collect();

    Ok(EnviHeader {
        samples,
        lines,
        bands,
        data_type,
        interleave,
        byte_order,
        header_offset,
        wavelengths,
        band_names,
        bbl,
        extra,
    })
}

fn decode_element(data: &[u8], idx: usize, dt: DataType, bo: ByteOrder) -> f64 {
    let s = dt.size_bytes();
    let b = &data[idx * s..idx * s + s];
    macro_rules! fetch {
        ($ty:ty) => {{
            let arr: [u8; std::mem::size_of::<$ty>()] = b.try_into().unwrap();
            match bo {
                ByteOrder::Little => <$ty>::from_le_bytes(arr),
                ByteOrder::Big => <$ty>::from_be_bytes(arr),
            }
        }};
    }
    match dt {
        DataType::U8 => b[0] as f64,
        DataType::I16 => fetch!(i16) as f64,
        DataType::I32 => fetch!(i32) as f64,
        DataType::F32 => fetch!(f32) as f64,
        DataType::F64 => fetch!(f64),
        DataType::U16 => fetch!(u16) as f64,
        DataType::U32 => fetch!(u32) as f64,
    }
}

/// Decodes a payload into the internal band-major representation.
/// `payload` is the entire data file, offset prefix included.
pub fn read_cube(header: &EnviHeader, payload: &[u8]) -> Result<HyperspectralCube> {
    let expected = header.expected_payload_len();
    if payload.len() != expected {
        return Err(Error::PayloadSize {
            expected,
            actual: payload.len(),
        });
    }
    let data = &payload[header.header_offset..];
    let (s, l, b) = (header.samples, header.lines, header.bands);
    let n = s * l;
    let dt = header.data_type;
    let bo = header.byte_order;

    let planes: Vec<Vec<f64>> = (0..b)
        .into_par_iter()
        .map(|band| {
            let mut plane = Vec::with_capacity(n);
            match header.interleave {
                Interleave::Bsq => {
                    for p in 0..n {
                        plane.push(decode_element(data, band * n + p, dt, bo));
                    }
                }
                Interleave::Bil => {
                    for line in 0..l {
                        let row = (line * b + band) * s;
                        for samp in 0..s {
                            plane.push(decode_element(data, row + samp, dt, bo));
                        }
                    }
                }
                Interleave::Bip => {
                    for p in 0..n {
                        plane.push(decode_element(data, p * b + band, dt, bo));
                    }
                }
            }
            plane
        })
        .collect();

    HyperspectralCube::with_metadata(
        l,
        s,
        planes,
        header.wavelengths.clone(),
        header.band_names.clone(),
    )
}

fn encode_element(
    v: f64,
    dt: DataType,
    band: usize,
    pixel: usize,
    out: &mut Vec<u8>,
) -> Result<()> {
    let fail = || Error::Unrepresentable {
        value: v,
        band: band + 1,
        pixel,
        data_type: dt.name(),
    };
    // integer targets use round-half-away-from-zero, which is what
    // f64::round implements
    match dt {
        DataType::U8 => {
            let r = v.round();
            if !(0.0..=255.0).contains(&r) {
                return Err(fail());
            }
            out.push(r as u8);
        }
        DataType::I16 => {
            let r = v.round();
            if !(i16::MIN as f64..=i16::MAX as f64).contains(&r) {
                return Err(fail());
            }
            out.extend_from_slice(&(r as i16).to_le_bytes());
        }
        DataType::I32 => {
            let r = v.round();
            if !(i32::MIN as f64..=i32::MAX as f64).contains(&r) {
                return Err(fail());
            }
            out.extend_from_slice(&(r as i32).to_le_bytes());
        }
        DataType::U16 => {
            let r = v.round();
            if !(0.0..=u16::MAX as f64).contains(&r) {
                return Err(fail());
            }
            out.extend_from_slice(&(r as u16).to_le_bytes());
        }
        DataType::U32 => {
            let r = v.round();
            if !(0.0..=u32::MAX as f64).contains(&r) {
                return Err(fail());
            }
            out.extend_from_slice(&(r as u32).to_le_bytes());
        }
        DataType::F32 => {
            let f = v as f32;
            if !f.is_finite() {
                return Err(fail());
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
        DataType::F64 => out.extend_from_slice(&v.to_le_bytes()),
    }
    Ok(())
}

/// Serializes a cube as (header text, payload bytes). Output is always
/// little-endian with zero header offset; integer targets quantize with
/// round-half-away-from-zero and error on out-of-range values.
pub fn write_cube(
    cube: &HyperspectralCube,
    interleave: Interleave,
    data_type: DataType,
) -> Result<(String, Vec<u8>)> {
    let (l, s, b) = (cube.lines(), cube.samples(), cube.bands());
    let n = l * s;
    let mut payload = Vec::with_capacity(n * b * data_type.size_bytes());

    match interleave {
        Interleave::Bsq => {
            for band in 0..b {
                let plane = cube.plane(band);
                for (pixel, &v) in plane.iter().enumerate() {
                    encode_element(v, data_type, band, pixel, &mut payload)?;
                }
            }
        }
        Interleave::Bil => {
            for line in 0..l {
                for band in 0..b {
                    let plane = cube.plane(band);
                    for samp in 0..s {
                        let pixel = line * s + samp;
                        encode_element(plane[pixel], data_type, band, pixel, &mut payload)?;
                    }
                }
            }
        }
        Interleave::Bip => {
            for pixel in 0..n {
                for band in 0..b {
                    encode_element(cube.plane(band)[pixel], data_type, band, pixel, &mut payload)?;
                }
            }
        }
    }

    let header = EnviHeader {
        samples: s,
        lines: l,
        bands: b,
        data_type,
        interleave,
        byte_order: ByteOrder::Little,
        header_offset: 0,
        wavelengths: cube.wavelengths().map(|w| w.to_vec()),
        band_names: cube.band_names().map(|n| n.to_vec()),
        bbl: None,
        extra: Vec::new(),
    };
    Ok((header.to_text(), payload))
}

/// Finds the data file belonging to a header: `<name>`, `<name>.dat` or
/// `<name>.img` next to `<name>.hdr`.
pub fn resolve_data_path(hdr_path: &Path) -> Result<PathBuf> {
    let stem = if hdr_path.extension().is_some_and(|e| e.eq_ignore_ascii_case("hdr")) {
        hdr_path.with_extension("")
    } else {
        hdr_path.to_path_buf()
    };
    let mut candidates = vec![stem.clone()];
    candidates.push(stem.with_extension("dat"));
    candidates.push(stem.with_extension("img"));
    for c in &candidates {
        if c.is_file() {
            return Ok(c.clone());
        }
    }
    Err(Error::InvalidArgument(format!(
        "no data file found for '{}' (tried {})",
        hdr_path.display(),
        candidates
            .iter()
            .map(|c| format!("'{}'", c.display()))
            .collect::<Vec<_>>()
            .join(", ")
    )))
}

/// Reads a header/data pair from disk.
pub fn load_cube(hdr_path: &Path) -> Result<(EnviHeader, HyperspectralCube)> {
    let text = fs::read_to_string(hdr_path)?;
    let header = parse_envi_header(&text)?;
    let payload = fs::read(resolve_data_path(hdr_path)?)?;
    let cube = read_cube(&header, &payload)?;
    Ok((header, cube))
}

/// Writes `<name>.hdr` + `<name>.dat` into `dir`, returning both paths.
pub fn save_cube(
    cube: &HyperspectralCube,
    dir: &Path,
    name: &str,
    interleave: Interleave,
    data_type: DataType,
) -> Result<(PathBuf, PathBuf)> {
    let (text, payload) = write_cube(cube, interleave, data_type)?;
    let hdr_path = dir.join(format!("{name}.hdr"));
    let dat_path = dir.join(format!("{name}.dat"));
    fs::write(&hdr_path, text)?;
    fs::write(&dat_path, payload)?;
    Ok((hdr_path, dat_path))
}
