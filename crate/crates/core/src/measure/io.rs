//! Measure CSV: header `x,y,weight`, one atom per row, decimal text.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Atom, AtomicMeasure, MeasureError};

pub fn read_measure<R: Read>(reader: R) -> Result<AtomicMeasure, MeasureError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "weight"] {
        return Err(MeasureError::InvalidParameter(format!(
            "expected header `x,y,weight`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut atoms = Vec::new();
    for row in rdr.deserialize() {
        let (x, y, weight): (f64, f64, f64) = row?;
        atoms.push(Atom::new(x, y, weight));
    }
    AtomicMeasure::new(atoms)
}

/// Writes every coordinate with 17 significant digits, enough to round-trip
/// any `f64` exactly.
pub fn write_measure<W: Write>(measure: &AtomicMeasure, writer: W) -> Result<(), MeasureError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["x", "y", "weight"])?;
    for a in measure.atoms() {
        wtr.write_record([
            format!("{:.16e}", a.position.re),
            format!("{:.16e}", a.position.im),
            format!("{:.16e}", a.weight),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_measure(path: impl AsRef<Path>) -> Result<AtomicMeasure, MeasureError> {
    read_measure(File::open(path)?)
}

pub fn save_measure(measure: &AtomicMeasure, path: impl AsRef<Path>) -> Result<(), MeasureError> {
    write_measure(measure, File::create(path)?)
}
