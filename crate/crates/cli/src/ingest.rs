//! CSV sample files: a one-line header, then `x[,y[,z]],value` rows.

use std::fs::File;
use std::path::Path;

use krige::{KrigeError, Location, SampleSet};

#[derive(Debug)]
pub struct Ingested {
    pub samples: SampleSet,
    /// Index pairs of rows sharing a location. Not an error here; the solver
    /// rejects them.
    pub duplicates: Vec<(usize, usize)>,
}

fn data_err(msg: String) -> KrigeError {
    KrigeError::Data(msg)
}

pub fn ingest(path: &Path, dimension_hint: Option<usize>) -> Result<Ingested, KrigeError> {
    let file = File::open(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    read_samples(file, dimension_hint)
}

pub fn read_samples(reader: impl std::io::Read, dimension_hint: Option<usize>) -> Result<Ingested, KrigeError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| data_err(format!("line 1: {e}")))?
        .clone();
    let columns = header.len();
    if !(2..=4).contains(&columns) {
        return Err(data_err(format!(
            "line 1: expected 2 to 4 columns (x[,y[,z]],value), found {columns}"
        )));
    }
    let dim = columns - 1;
    if let Some(hint) = dimension_hint {
        if hint != dim {
            return Err(data_err(format!(
                "line 1: header has {dim} coordinate column(s) but --dim is {hint}"
            )));
        }
    }

    let mut locations = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            data_err(format!("line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != columns {
            return Err(data_err(format!(
                "line {line}: expected {columns} columns, found {}",
                record.len()
            )));
        }
        let mut cells = Vec::with_capacity(columns);
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| data_err(format!("line {line}, column {}: `{cell}` is not a number", col + 1)))?;
            if !v.is_finite() {
                return Err(data_err(format!(
                    "line {line}, column {}: non-finite value `{cell}`",
                    col + 1
                )));
            }
            cells.push(v);
        }
        let value = cells.pop().unwrap_or_default();
        locations.push(Location::new(cells)?);
        values.push(value);
    }
    if values.is_empty() {
        return Err(data_err("no data rows".into()));
    }
    let duplicates = krige::correlation::coincident_pairs(&locations);
    Ok(Ingested {
        samples: SampleSet::new(locations, values)?,
        duplicates,
    })
}

/// Serialize in the format [`read_samples`] accepts. Numbers use the
/// shortest representation that parses back to the same `f64`.
pub fn write_samples(samples: &SampleSet) -> String {
    let axes = ["x", "y", "z"];
    let mut out = String::new();
    out.push_str(&axes[..samples.dim()].join(","));
    out.push_str(",value\n");
    for (loc, v) in samples.locations().iter().zip(samples.values()) {
        for c in loc.coords() {
            out.push_str(&format!("{c:?},"));
        }
        out.push_str(&format!("{v:?}\n"));
    }
    out
}
