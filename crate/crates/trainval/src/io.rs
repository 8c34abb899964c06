//! Dataset CSV reading and writing.
//!
//! Format: header `id,label,f0,…,f{D-1}`, one example per line, labels
//! strictly `1` or `-1`, features as decimal floats. Reals are written with
//! 17 significant digits so parsing them back is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dataset::{Dataset, Example, Label};
use crate::error::{Error, Result};

/// Formats a real with 17 significant digits (round-trip exact for f64).
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path)?;
    read_dataset(BufReader::new(file))
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => {
            return Err(Error::Csv {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    let cols: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "label" {
        return Err(Error::Csv {
            line: 1,
            message: format!("header must be id,label,f0,... got {header:?}"),
        });
    }
    let dim = cols.len() - 2;

    let mut examples = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != dim + 2 {
            return Err(Error::Csv {
                line: line_no,
                message: format!("expected {} columns, got {}", dim + 2, cells.len()),
            });
        }
        let id = cells[0].trim();
        if id.is_empty() {
            return Err(Error::Csv {
                line: line_no,
                message: "empty id".into(),
            });
        }
        let label = Label::parse(cells[1]).ok_or_else(|| Error::Csv {
            line: line_no,
            message: format!("label must be 1 or -1, got {:?}", cells[1]),
        })?;
        let mut features = Vec::with_capacity(dim);
        for (c, cell) in cells[2..].iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| Error::Csv {
                line: line_no,
                message: format!("feature f{c} is not a number: {cell:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Csv {
                    line: line_no,
                    message: format!("feature f{c} is not finite: {cell:?}"),
                });
            }
            features.push(value);
        }
        examples.push(Example::new(id, label, features));
    }
    Dataset::new(examples)
}

pub fn write_dataset_csv(path: &Path, d: &Dataset) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_dataset(&mut w, d)?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset<W: Write>(w: &mut W, d: &Dataset) -> Result<()> {
    write!(w, "id,label")?;
    for i in 0..d.dim() {
        write!(w, ",f{i}")?;
    }
    writeln!(w)?;
    for ex in d.examples() {
        write!(
            w,
            "{},{}",
            ex.id,
            match ex.label {
                Label::Positive => "1",
                Label::Negative => "-1",
            }
        )?;
        for f in &ex.features {
            write!(w, ",{}", format_f64(*f))?;
        }
        writeln!(w)?;
    }
    Ok(())
}
