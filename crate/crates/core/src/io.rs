//! File formats: histogram CSV, distribution JSON/CSV, Fig-2 style comparison CSV,
//! per-window NDJSON records and report JSON.
//!
//! Floats are written with 17 significant digits everywhere, so every value read back
//! is bit-identical to the one written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::analyzer::CountHistogram;
use crate::error::{Error, Result};
use crate::source::WindowRecord;
use crate::statkit::PhotonDist;

/// `x` with 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON formatter that prints every float with 17 significant digits.
struct Sig17<F>(F);

impl<F: Formatter> Formatter for Sig17<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt17(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        writer.write_all(fmt17(value as f64).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

#[derive(Clone, Copy)]
struct Compact;
impl Formatter for Compact {}

fn to_json_with<T: Serialize + ?Sized, F: Formatter>(value: &T, formatter: F) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(formatter));
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Pretty-printed JSON with 17-digit floats.
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    to_json_with(value, PrettyFormatter::new())
}

/// Single-line JSON with 17-digit floats.
pub fn to_json_line<T: Serialize + ?Sized>(value: &T) -> String {
    to_json_with(value, Compact)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json_pretty(value);
    text.push('\n');
    write_text(path, &text)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Histogram as CSV: a `# {json}` header line, then `i,count` rows.
pub fn histogram_csv<H: Serialize>(hist: &CountHistogram, header: &H) -> String {
    let mut out = format!("# {}\ni,count\n", to_json_line(header));
    for (i, n) in &hist.counts {
        let _ = writeln!(out, "{i},{n}");
    }
    out
}

pub fn write_histogram_csv<H: Serialize>(path: &Path, hist: &CountHistogram, header: &H) -> Result<()> {
    write_text(path, &histogram_csv(hist, header))
}

/// Parses the format written by [`histogram_csv`]; the header line is optional.
pub fn parse_histogram_csv(path: &Path, text: &str) -> Result<CountHistogram> {
    let mut counts = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("i,") {
            continue;
        }
        let (i, n) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, format!("line {}: expected 'i,count'", lineno + 1)))?;
        let i: usize = i
            .trim()
            .parse()
            .map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?;
        let n: u64 = n
            .trim()
            .parse()
            .map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?;
        *counts.entry(i).or_insert(0) += n;
    }
    CountHistogram::from_counts(counts).map_err(|e| parse_err(path, e.to_string()))
}

pub fn read_histogram_csv(path: &Path) -> Result<CountHistogram> {
    parse_histogram_csv(path, &read_text(path)?)
}

/// Distribution as CSV with columns `j,P,sigma` (sigma empty when absent).
pub fn dist_csv(dist: &PhotonDist) -> String {
    let mut out = String::from("j,P,sigma\n");
    for (j, &p) in dist.probs().iter().enumerate() {
        let sigma = dist.sigma().map(|s| fmt17(s[j])).unwrap_or_default();
        let _ = writeln!(out, "{j},{},{sigma}", fmt17(p));
    }
    out
}

pub fn parse_dist_csv(path: &Path, text: &str) -> Result<PhotonDist> {
    let mut probs = Vec::new();
    let mut sigma = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("j,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |m: String| parse_err(path, format!("line {}: {m}", lineno + 1));
        let j: usize = fields[0].parse().map_err(|e| bad(format!("{e}")))?;
        if j != probs.len() {
            return Err(bad(format!("expected j = {}, found {j}", probs.len())));
        }
        let p: f64 = fields
            .get(1)
            .ok_or_else(|| bad("missing P column".into()))?
            .parse()
            .map_err(|e| bad(format!("{e}")))?;
        probs.push(p);
        if let Some(s) = fields.get(2).filter(|s| !s.is_empty()) {
            sigma.push(s.parse::<f64>().map_err(|e| bad(format!("{e}")))?);
        }
    }
    let dist = PhotonDist::new(probs).map_err(|e| parse_err(path, e.to_string()))?;
    if sigma.is_empty() {
        Ok(dist)
    } else {
        dist.with_sigma(sigma).map_err(|e| parse_err(path, e.to_string()))
    }
}

/// Reads a distribution from `.json` (`{n_max, probs, sigma?}`) or `.csv`.
pub fn read_dist(path: &Path) -> Result<PhotonDist> {
    let text = read_text(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => parse_dist_csv(path, &text),
        _ => serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string())),
    }
}

/// Parses an inline list such as `0.9199,0.0794,0.0005`.
pub fn parse_inline_probs(text: &str) -> Result<PhotonDist> {
    let probs = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad probability '{s}': {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    PhotonDist::new(probs)
}

/// Writes one JSON object per window.
pub fn write_records<I>(path: &Path, records: I) -> Result<()>
where
    I: IntoIterator<Item = WindowRecord>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        writeln!(w, "{}", to_json_line(&rec)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Generic CSV writer: header plus rows of floats at 17 digits.
pub fn float_table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
