//! Delimiter-separated point files: one point per row, optional header.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metric::{MetricKind, PointSet};

const CANDIDATES: [u8; 4] = [b',', b'\t', b';', b' '];

/// Picks the delimiter from the first non-empty line.
pub fn sniff_delimiter(line: &str) -> u8 {
    CANDIDATES
        .into_iter()
        .find(|&d| line.as_bytes().contains(&d))
        .unwrap_or(b',')
}

/// Parses points from a reader. A first row that does not parse as numbers
/// is treated as a header.
pub fn read_points_from<R: Read>(reader: R, metric: MetricKind) -> Result<PointSet> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).ok_or(Error::EmptyInput("point file is empty"))?;
    let delim = sniff_delimiter(first.trim());
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let fields: Vec<&str> = rec.iter().filter(|f| !(delim == b' ' && f.is_empty())).collect();
        if fields.is_empty() || fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if rows.is_empty() && line == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line: line + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("point file has no data rows"));
    }
    let dim = rows[0].len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
        return Err(Error::Parse {
            line: i + 1,
            message: format!("expected {dim} fields, found {}", r.len()),
        });
    }
    PointSet::from_rows(&rows, metric)
}

pub fn read_points(path: impl AsRef<Path>, metric: MetricKind) -> Result<PointSet> {
    read_points_from(File::open(path)?, metric)
}

/// Writes comma-separated rows with an `x0,x1,...` header.
pub fn write_points_to<W: Write>(writer: W, set: &PointSet) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record((0..set.dim()).map(|j| format!("x{j}")))?;
    for i in 0..set.len() {
        wtr.write_record(set.row(i).iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_points(path: impl AsRef<Path>, set: &PointSet) -> Result<()> {
    write_points_to(std::io::BufWriter::new(File::create(path)?), set)
}

/// Reads line-delimited JSON records.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
