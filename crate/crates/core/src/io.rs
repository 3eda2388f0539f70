//! Headerless CSV for matrices, one integer per line for labels.
//!
//! Floats are written with 17 significant digits so that a write/read cycle
//! reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::NosCurve;
use crate::matrix::{DataMatrix, DistanceMatrix, LabelVector};
use crate::optimizer::Embedding;

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| Error::Parse {
                    line: line + 1,
                    msg: format!("{field:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_rows<W: Write>(
    writer: W,
    rows: impl IntoIterator<Item = impl AsRef<[f64]>>,
) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for row in rows {
        let line: Vec<String> = row.as_ref().iter().map(|&v| format_float(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_data_matrix(path: &Path) -> Result<DataMatrix> {
    DataMatrix::from_rows(&read_rows(File::open(path)?)?)
}

pub fn read_distance_matrix(path: &Path) -> Result<DistanceMatrix> {
    DistanceMatrix::from_rows(&read_rows(File::open(path)?)?)
}

pub fn write_data_matrix(path: &Path, data: &DataMatrix) -> Result<()> {
    write_rows(File::create(path)?, data.as_slice().chunks(data.dims()))
}

pub fn write_distance_matrix(path: &Path, d: &DistanceMatrix) -> Result<()> {
    write_rows(File::create(path)?, d.as_slice().chunks(d.n()))
}

pub fn write_embedding(path: &Path, y: &Embedding) -> Result<()> {
    write_rows(File::create(path)?, y.points().iter())
}

pub fn read_embedding(path: &Path) -> Result<Embedding> {
    let rows = read_rows(File::open(path)?)?;
    let points = rows
        .iter()
        .map(|r| match r.as_slice() {
            [a, b] => Ok([*a, *b]),
            _ => Err(Error::DimensionMismatch {
                expected: 2,
                actual: r.len(),
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    Embedding::new(points)
}

pub fn read_labels_from<R: Read>(reader: R) -> Result<LabelVector> {
    let mut labels = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        labels.push(t.parse::<i64>().map_err(|e| Error::Parse {
            line: idx + 1,
            msg: format!("{t:?}: {e}"),
        })?);
    }
    LabelVector::new(labels)
}

pub fn read_labels(path: &Path) -> Result<LabelVector> {
    read_labels_from(File::open(path)?)
}

pub fn write_labels(path: &Path, labels: &LabelVector) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in labels.as_slice() {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

/// `k,score` with a header row.
pub fn write_curve(path: &Path, curve: &NosCurve) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "k,score")?;
    for (k, s) in curve.ks.iter().zip(&curve.scores) {
        writeln!(w, "{k},{}", format_float(*s))?;
    }
    w.flush()?;
    Ok(())
}
