//! CSV readers and writers for series sets, recordings, spectra and spike catalogs.
//!
//! Series files are column-oriented: a header row of series names, then one
//! row per time step. A leading column named `t` or `time` is treated as a
//! time index and skipped. Numbers are written with Rust's shortest
//! round-trip formatting, so a write/read cycle reproduces every value exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use specem_core::sim::Placement;
use specem_core::spectral::Spectrum;
use specem_core::{Recording, SpikeCatalog, TimeSeriesSet};

use crate::error::IoError;

fn is_time_header(name: &str) -> bool {
    matches!(name.trim().to_ascii_lowercase().as_str(), "t" | "time")
}

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<f64, IoError> {
    let trimmed = cell.trim();
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IoError::Parse {
            row,
            col,
            cell: trimmed.to_string(),
        }),
    }
}

/// Parse a series table. Row and column numbers in errors are 1-based file positions.
pub fn parse_series_csv<R: Read>(reader: R) -> Result<TimeSeriesSet, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(IoError::EmptyFile);
    }
    let skip = usize::from(is_time_header(&headers[0]));
    let names: Vec<String> = headers.iter().skip(skip).map(str::to_string).collect();
    if names.is_empty() {
        return Err(IoError::EmptyFile);
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != headers.len() {
            return Err(IoError::Ragged {
                row: line,
                expected: headers.len(),
                found: record.len(),
            });
        }
        for (c, cell) in record.iter().enumerate().skip(skip) {
            if cell.is_empty() {
                return Err(IoError::Ragged {
                    row: line,
                    expected: headers.len(),
                    found: c,
                });
            }
            columns[c - skip].push(parse_cell(cell, line, c + 1)?);
        }
    }
    if columns[0].is_empty() {
        return Err(IoError::EmptyFile);
    }
    Ok(TimeSeriesSet::from_columns(columns)?.with_labels(names)?)
}

pub fn read_series_csv(path: &Path) -> Result<TimeSeriesSet, IoError> {
    parse_series_csv(open(path)?)
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::Open {
        path: path.display().to_string(),
        source,
    })
}

/// Column names for a set, falling back to `s0, s1, ...`.
pub fn series_names(set: &TimeSeriesSet) -> Vec<String> {
    match set.labels() {
        Some(l) => l.to_vec(),
        None => (0..set.len()).map(|i| format!("s{i}")).collect(),
    }
}

pub fn write_series_csv<W: Write>(set: &TimeSeriesSet, names: &[String], writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for t in 0..set.series_len() {
        let mut row = vec![t.to_string()];
        row.extend(set.iter().map(|s| s.values()[t].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a recording: one float per line (whitespace or single-column CSV), or a
/// multi-column CSV with a column named `y`.
pub fn parse_recording<R: Read>(reader: R) -> Result<Recording, IoError> {
    let mut lines = BufReader::new(reader).lines().enumerate().peekable();
    let mut samples = Vec::new();
    let mut y_col: Option<usize> = None;

    // Skip blank lines to find the first content line.
    while let Some((_, Ok(l))) = lines.peek() {
        if l.trim().is_empty() {
            lines.next();
        } else {
            break;
        }
    }
    let Some((first_idx, first)) = lines.next() else {
        return Err(IoError::EmptyFile);
    };
    let first = first?;
    let split = |s: &str| -> Vec<String> {
        if s.contains(',') {
            s.split(',').map(|c| c.trim().to_string()).collect()
        } else {
            s.split_whitespace().map(str::to_string).collect()
        }
    };
    let cells = split(&first);
    let is_header = cells.iter().any(|c| c.parse::<f64>().is_err());
    let width = cells.len();
    if width > 1 {
        if !is_header {
            return Err(IoError::AmbiguousColumns(width));
        }
        y_col = Some(
            cells
                .iter()
                .position(|c| c == "y")
                .ok_or(IoError::AmbiguousColumns(width))?,
        );
    } else if !is_header {
        samples.push(parse_cell(&cells[0], first_idx + 1, 1)?);
    }

    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells = split(&line);
        let col = y_col.unwrap_or(0);
        if cells.len() != width {
            return Err(IoError::Ragged {
                row: idx + 1,
                expected: width,
                found: cells.len(),
            });
        }
        samples.push(parse_cell(&cells[col], idx + 1, col + 1)?);
    }
    if samples.is_empty() {
        return Err(IoError::EmptyFile);
    }
    Ok(Recording::new(samples)?)
}

pub fn read_recording(path: &Path) -> Result<Recording, IoError> {
    parse_recording(open(path)?)
}

pub fn write_recording_csv<W: Write>(rec: &Recording, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["y"])?;
    for v in rec.samples() {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format spectra: `series, j, omega, power`.
pub fn write_spectra_csv<W: Write>(names: &[String], spectra: &[Spectrum], writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["series", "j", "omega", "power"])?;
    for (name, s) in names.iter().zip(spectra) {
        for (idx, p) in s.power().iter().enumerate() {
            w.write_record([
                name.clone(),
                s.bin_index(idx).to_string(),
                s.frequency(idx).to_string(),
                p.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read the long-format spectra table back, grouped by series in file order.
pub fn parse_spectra_csv<R: Read>(reader: R, series_len: usize) -> Result<Vec<(String, Spectrum)>, IoError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(IoError::Ragged {
                row: line,
                expected: 4,
                found: record.len(),
            });
        }
        let power = parse_cell(&record[3], line, 4)?;
        match out.last_mut() {
            Some((name, values)) if name == &record[0] => values.push(power),
            _ => out.push((record[0].to_string(), vec![power])),
        }
    }
    out.into_iter()
        .map(|(name, power)| Ok((name, Spectrum::raw(power, series_len)?)))
        .collect()
}

/// `spike, onset, slowness` per catalog entry.
pub fn write_onsets_csv<W: Write>(catalog: &SpikeCatalog, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["spike", "onset", "slowness"])?;
    for (i, (onset, s)) in catalog.onsets.iter().zip(&catalog.slowness).enumerate() {
        w.write_record([i.to_string(), onset.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn catalog_names(catalog: &SpikeCatalog) -> Vec<String> {
    (0..catalog.len()).map(|i| format!("spike_{i}")).collect()
}

/// `onset, template` ground truth of a synthetic recording.
pub fn write_truth_csv<W: Write>(truth: &[Placement], writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["onset", "template"])?;
    for p in truth {
        w.write_record([p.onset.to_string(), p.template.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `series, label, class` for simulated data.
pub fn write_labels_csv<W: Write>(names: &[String], labels: &[usize], classes: &[String], writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["series", "label", "class"])?;
    for (name, &l) in names.iter().zip(labels) {
        w.write_record([name.clone(), l.to_string(), classes[l].clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Write `(name, value)` rows under a two-column header.
pub fn write_columns_csv<W: Write>(header: &[&str], rows: &[Vec<String>], writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
