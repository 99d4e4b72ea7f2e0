//! PGM rasters, JSON-lines pulse dumps and CSV histograms.
//!
//! PGM cannot hold negative samples, so writers either clip into
//! `[0, maxval]` or shift by the minimum and record the shift in a JSON
//! sidecar next to the image.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::connectivity::{is_connected, Connectivity};
use crate::dpt::{laminarity, DptDecomposition, Pulse};
use crate::error::{LuluError, Result};
use crate::grid::GridImage;

/// Parses a P2 or P5 file. The image gets zero padding.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<GridImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| LuluError::io(path, e))?;
    parse_pgm(&bytes, path)
}

/// Parses PGM bytes; `path` only labels errors.
pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<GridImage> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        path,
    };
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(cur.error("expected magic number P2 or P5")),
    };
    cur.pos = 2;
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    let maxval_at = cur.pos;
    let maxval = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(cur.error(&format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if !(1..=65535).contains(&maxval) {
        cur.pos = maxval_at;
        return Err(cur.error(&format!("maxval {maxval} outside 1..=65535")));
    }
    let count = width
        .checked_mul(height)
        .filter(|&c| c <= isize::MAX as u64 / 2)
        .ok_or_else(|| cur.error(&format!("image dimensions {width}x{height} too large")))?
        as usize;

    let mut values = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(cur.error("expected a single whitespace byte before the raster")),
        }
        let sample_bytes = if maxval < 256 { 1 } else { 2 };
        let expected = count * sample_bytes;
        let payload = &bytes[cur.pos..];
        if payload.len() < expected {
            return Err(cur.error(&format!(
                "truncated raster: expected {expected} bytes of pixel data, found {}",
                payload.len()
            )));
        }
        for (k, chunk) in payload[..expected].chunks_exact(sample_bytes).enumerate() {
            let v = match *chunk {
                [b] => u64::from(b),
                [hi, lo] => u64::from(u16::from_be_bytes([hi, lo])),
                _ => unreachable!(),
            };
            if v > maxval {
                cur.pos += k * sample_bytes;
                return Err(cur.error(&format!("sample {v} exceeds maxval {maxval}")));
            }
            values.push(v as i64);
        }
    } else {
        for k in 0..count {
            let at = cur.skip_space();
            let v = cur.number().ok_or_else(|| {
                if at >= bytes.len() {
                    cur.error(&format!(
                        "truncated raster: expected {count} samples, found {k}"
                    ))
                } else {
                    cur.error("expected a decimal sample")
                }
            })?;
            if v > maxval {
                cur.pos = at;
                return Err(cur.error(&format!("sample {v} exceeds maxval {maxval}")));
            }
            values.push(v as i64);
        }
    }
    GridImage::new(width as usize, height as usize, values, 0)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Cursor<'_> {
    fn error(&self, message: &str) -> LuluError {
        LuluError::PgmParse {
            path: self.path.to_path_buf(),
            offset: self.pos,
            message: message.to_string(),
        }
    }

    /// Skips whitespace and `#` comments; returns the new position.
    fn skip_space(&mut self) -> usize {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.pos
    }

    fn number(&mut self) -> Option<u64> {
        let start = self.pos;
        let mut v: u64 = 0;
        while let Some(d) = self.bytes.get(self.pos).filter(|b| b.is_ascii_digit()) {
            v = v.checked_mul(10)?.checked_add(u64::from(d - b'0'))?;
            self.pos += 1;
        }
        (self.pos > start).then_some(v)
    }

    fn header_number(&mut self, what: &str) -> Result<u64> {
        let before = self.pos;
        self.skip_space();
        if self.pos == before {
            return Err(self.error(&format!("expected whitespace before {what}")));
        }
        self.number()
            .ok_or_else(|| self.error(&format!("expected {what} as a decimal number")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PgmMode {
    /// Clamp into `[0, maxval]`, counting changed pixels.
    #[default]
    Clip,
    /// Add `-min` when the minimum is negative; lossless up to that offset.
    Offset,
}

impl std::str::FromStr for PgmMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "clip" => Ok(PgmMode::Clip),
            "offset" => Ok(PgmMode::Offset),
            _ => Err(format!("expected clip or offset, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PgmOptions {
    pub mode: PgmMode,
    /// Defaults to 255 when every written sample fits, else 65535.
    pub maxval: Option<u16>,
    /// Plain-text P2 instead of binary P5.
    pub ascii: bool,
}

/// What [`write_pgm`] did to fit the image into PGM. Also the sidecar
/// contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PgmWriteReport {
    pub mode: PgmMode,
    pub maxval: u16,
    /// Added to every value before writing.
    pub offset: i64,
    pub clipped: usize,
}

impl PgmWriteReport {
    pub fn is_lossless(&self) -> bool {
        self.offset == 0 && self.clipped == 0
    }
}

/// Path of the JSON sidecar written next to a lossy or shifted PGM.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `f` as PGM. Writes a sidecar at [`sidecar_path`] whenever the
/// samples on disk differ from the image values.
pub fn write_pgm(
    f: &GridImage,
    path: impl AsRef<Path>,
    options: PgmOptions,
) -> Result<PgmWriteReport> {
    let path = path.as_ref();
    let (bytes, report) = encode_pgm(f, options)?;
    fs::write(path, bytes).map_err(|e| LuluError::io(path, e))?;
    if !report.is_lossless() {
        let sidecar = sidecar_path(path);
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        fs::write(&sidecar, json + "\n").map_err(|e| LuluError::io(&sidecar, e))?;
    }
    Ok(report)
}

pub fn encode_pgm(f: &GridImage, options: PgmOptions) -> Result<(Vec<u8>, PgmWriteReport)> {
    let offset = match options.mode {
        PgmMode::Offset => (-f.min_value()).max(0),
        PgmMode::Clip => 0,
    };
    let top = f.max_value() + offset;
    let maxval = match options.maxval {
        Some(m) => m.max(1),
        None if top <= 255 => 255,
        None => 65535,
    };
    if options.mode == PgmMode::Offset && top > i64::from(maxval) {
        return Err(LuluError::PgmRange {
            value: f.max_value(),
            maxval: u32::from(maxval),
        });
    }

    let mut clipped = 0;
    let samples: Vec<u16> = f
        .values()
        .iter()
        .map(|&v| {
            let s = v + offset;
            let c = s.clamp(0, i64::from(maxval));
            clipped += usize::from(c != s);
            c as u16
        })
        .collect();

    let magic = if options.ascii { "P2" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", f.width(), f.height()).into_bytes();
    if options.ascii {
        for row in samples.chunks(f.width()) {
            let line: Vec<String> = row.iter().map(u16::to_string).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    } else if maxval < 256 {
        out.extend(samples.iter().map(|&s| s as u8));
    } else {
        out.extend(samples.iter().flat_map(|s| s.to_be_bytes()));
    }
    let report = PgmWriteReport {
        mode: options.mode,
        maxval,
        offset,
        clipped,
    };
    Ok((out, report))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ConnectivitySpec {
    Degree(u8),
    Offsets(Vec<[i64; 2]>),
}

impl ConnectivitySpec {
    fn of(conn: &Connectivity) -> Self {
        match conn.standard_degree() {
            Some(d) => ConnectivitySpec::Degree(d),
            None => {
                ConnectivitySpec::Offsets(conn.offsets().iter().map(|&(r, c)| [r, c]).collect())
            }
        }
    }

    fn resolve(&self) -> std::result::Result<Connectivity, String> {
        match self {
            ConnectivitySpec::Degree(4) => Ok(Connectivity::four()),
            ConnectivitySpec::Degree(8) => Ok(Connectivity::eight()),
            ConnectivitySpec::Degree(d) => Err(format!("connectivity {d} is neither 4 nor 8")),
            ConnectivitySpec::Offsets(list) => {
                let line = Connectivity::horizontal_line();
                let offsets: Vec<_> = list.iter().map(|&[r, c]| (r, c)).collect();
                let mut sorted = offsets.clone();
                sorted.sort_unstable();
                if sorted == line.offsets() {
                    return Ok(line);
                }
                Connectivity::custom(offsets).map_err(|e| e.to_string())
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    width: usize,
    height: usize,
    connectivity: ConnectivitySpec,
    residual: i64,
    #[serde(default = "complete_default")]
    complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    residual_image: Option<ResidualRef>,
}

fn complete_default() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResidualRef {
    /// Relative to the directory of the pulse file.
    file: String,
    offset: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseLine {
    n: usize,
    amp: i64,
    pixels: Vec<[i64; 2]>,
}

/// Path of the remainder image written for truncated decompositions.
pub fn residual_path(path: &Path) -> PathBuf {
    path.with_extension("residual.pgm")
}

/// Writes the header line and one line per pulse, ascending layer then
/// first pixel. A truncated decomposition also gets its remainder written
/// to [`residual_path`].
pub fn write_pulses(d: &DptDecomposition, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let residual_image = match &d.residual_image {
        Some(img) => {
            let file = residual_path(path);
            let report = write_pgm(
                img,
                &file,
                PgmOptions {
                    mode: PgmMode::Offset,
                    ..PgmOptions::default()
                },
            )?;
            Some(ResidualRef {
                file: file
                    .file_name()
                    .expect("residual path has a file name")
                    .to_string_lossy()
                    .into_owned(),
                offset: report.offset,
            })
        }
        None => None,
    };
    let header = Header {
        width: d.width,
        height: d.height,
        connectivity: ConnectivitySpec::of(&d.connectivity),
        residual: d.residual_constant,
        complete: d.is_complete(),
        residual_image,
    };

    let mut out = Vec::new();
    serde_json::to_writer(&mut out, &header).expect("header serializes");
    out.push(b'\n');
    for (&n, layer) in &d.layers {
        for p in layer {
            let line = PulseLine {
                n,
                amp: p.amplitude,
                pixels: p.support.iter().map(|&(r, c)| [r, c]).collect(),
            };
            serde_json::to_writer(&mut out, &line).expect("pulse serializes");
            out.push(b'\n');
        }
    }
    let mut file = fs::File::create(path).map_err(|e| LuluError::io(path, e))?;
    file.write_all(&out).map_err(|e| LuluError::io(path, e))
}

/// Reads a pulse dump and re-checks layer sizes, amplitudes, bounds,
/// connectivity, ordering, same-layer disjointness and nesting.
pub fn read_pulses(path: impl AsRef<Path>) -> Result<DptDecomposition> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| LuluError::io(path, e))?;
    let schema = |line: usize, message: String| LuluError::PulseSchema {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines
        .next()
        .ok_or_else(|| schema(1, "missing header line".into()))?;
    let header: Header =
        serde_json::from_str(first).map_err(|e| schema(1, format!("bad header: {e}")))?;
    let conn = header.connectivity.resolve().map_err(|m| schema(1, m))?;
    if header.width == 0 || header.height == 0 {
        return Err(schema(1, "width and height must be positive".into()));
    }
    if header.complete != header.residual_image.is_none() {
        return Err(schema(
            1,
            "a residual image is required exactly when the decomposition is incomplete".into(),
        ));
    }

    let mut d = DptDecomposition::empty(header.width, header.height, conn, header.residual);
    if let Some(r) = &header.residual_image {
        let file = path.parent().unwrap_or(Path::new("")).join(&r.file);
        let img = read_pgm(&file)?;
        if img.width() != header.width || img.height() != header.height {
            return Err(schema(
                1,
                format!("residual image {} has the wrong size", file.display()),
            ));
        }
        let values = img.values().iter().map(|v| v - r.offset).collect();
        d.residual_image = Some(GridImage::new(
            header.width,
            header.height,
            values,
            header.residual,
        )?);
    }

    let mut line_of = Vec::new();
    let mut owner: Vec<(usize, usize)> = vec![(0, 0); header.width * header.height];
    let mut last_key = None;
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let p: PulseLine =
            serde_json::from_str(line).map_err(|e| schema(ln, format!("bad pulse: {e}")))?;
        if p.amp == 0 {
            return Err(schema(ln, "pulse amplitude must be non-zero".into()));
        }
        if p.n == 0 {
            return Err(schema(ln, "layer must be at least 1".into()));
        }
        if p.pixels.len() != p.n {
            return Err(schema(
                ln,
                format!("layer {} pulse has {} pixels", p.n, p.pixels.len()),
            ));
        }
        let pulse = Pulse::new(p.pixels.iter().map(|&[r, c]| (r, c)).collect(), p.amp);
        if pulse.layer() != p.n {
            return Err(schema(ln, "pulse lists a pixel twice".into()));
        }
        let key = (p.n, pulse.first_pixel());
        if last_key.is_some_and(|k| k >= key) {
            return Err(schema(
                ln,
                "pulses must be ordered by layer, then first pixel".into(),
            ));
        }
        last_key = Some(key);
        for &(r, c) in &pulse.support {
            if r < 0 || c < 0 || r as usize >= header.height || c as usize >= header.width {
                return Err(schema(ln, format!("pixel {:?} outside the image", (r, c))));
            }
            let slot = &mut owner[r as usize * header.width + c as usize];
            if slot.0 == p.n {
                return Err(schema(
                    ln,
                    format!(
                        "support overlaps the layer {} pulse on line {} at {:?}; pulses in one layer must be disjoint",
                        p.n,
                        slot.1,
                        (r, c)
                    ),
                ));
            }
            *slot = (p.n, ln);
        }
        if !is_connected(&pulse.support_set(), &d.connectivity) {
            return Err(schema(ln, "support is not connected".into()));
        }
        line_of.push(ln);
        d.layers.entry(p.n).or_default().push(pulse);
    }

    let (disjoint, nesting) = laminarity(&d);
    if let Some((idx, message)) = disjoint.or(nesting) {
        return Err(schema(line_of[idx], message));
    }
    Ok(d)
}

/// Writes `size,count` rows in ascending size order.
pub fn write_histogram(h: &[(usize, usize)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, histogram_csv(h)).map_err(|e| LuluError::io(path, e))
}

pub fn histogram_csv(h: &[(usize, usize)]) -> String {
    let mut sorted = h.to_vec();
    sorted.sort_unstable();
    let mut out = String::from("size,count\n");
    for (size, count) in sorted {
        out.push_str(&format!("{size},{count}\n"));
    }
    out
}
