//! Artifact emission: the CSV field format, check tables, and JSON
//! summaries. All numbers are printed with 17 significant digits so field
//! files round-trip bit-exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretization::{SampledField, SpaceTimeGrid};
use crate::{Error, Result};

/// Format a float with 17 significant digits (bit-exact round trip).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a sampled field as CSV: header `t,x1[,x2[,x3]],value`, one row per
/// (slice, node) in slice-major order.
pub fn write_field_csv(path: &Path, field: &SampledField) -> Result<()> {
    let grid = &field.grid;
    let dim = grid.dim();
    let mut out = String::new();
    out.push('t');
    for d in 0..dim {
        out.push_str(&format!(",x{}", d + 1));
    }
    out.push_str(",value\n");
    for k in 0..grid.n_slices() {
        let t = grid.time(k);
        for j in 0..grid.n_nodes() {
            let x = grid.coords(j);
            out.push_str(&fmt_f64(t));
            for c in &x {
                out.push(',');
                out.push_str(&fmt_f64(*c));
            }
            out.push(',');
            out.push_str(&fmt_f64(field.value(k, j)));
            out.push('\n');
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a field CSV back onto its grid. Rows must appear in slice-major
/// order and match the grid size exactly.
pub fn read_field_csv(path: &Path, grid: &Arc<SpaceTimeGrid>) -> Result<SampledField> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty field csv".into()))?;
    let expected_cols = grid.dim() + 2;
    if header.split(',').count() != expected_cols {
        return Err(Error::Config(format!(
            "field csv header has wrong arity (expected {expected_cols} columns)"
        )));
    }
    let mut field = SampledField::zeros(grid);
    let mut count = 0usize;
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != expected_cols {
            return Err(Error::Config(format!("bad column count at data row {row}")));
        }
        let value: f64 = cols[expected_cols - 1]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad value at data row {row}")))?;
        let k = count / grid.n_nodes();
        let j = count % grid.n_nodes();
        if k >= grid.n_slices() {
            return Err(Error::Config("field csv has more rows than grid nodes".into()));
        }
        field.set(k, j, value);
        count += 1;
    }
    if count != grid.n_slices() * grid.n_nodes() {
        return Err(Error::Config(format!(
            "field csv has {count} rows, grid wants {}",
            grid.n_slices() * grid.n_nodes()
        )));
    }
    Ok(field)
}

/// Write a generic check table.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "{}", header.join(","))?;
    for row in rows {
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}

/// One pass/fail entry of the run summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Assertion {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Run summary written as `summary.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub status: String,
    pub seed: u64,
    pub tasks: Vec<String>,
    pub assertions: Vec<Assertion>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::BoxDomain;
    use crate::rng::SplitMix64;

    #[test]
    fn field_csv_round_trips_bit_exactly() {
        let grid = SpaceTimeGrid::new(BoxDomain::unit_square(), 1.0, 3, vec![5, 4]).unwrap();
        let mut rng = SplitMix64::new(9);
        let field = SampledField::from_fn(&grid, |_, _| rng.range(-10.0, 10.0) * 1.0e-7);
        let dir = std::env::temp_dir().join("parabound_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.csv");
        write_field_csv(&path, &field).unwrap();
        let back = read_field_csv(&path, &grid).unwrap();
        assert_eq!(field.values, back.values);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn field_csv_rejects_wrong_shape() {
        let grid = SpaceTimeGrid::new(BoxDomain::unit_interval(), 1.0, 2, vec![4]).unwrap();
        let field = SampledField::zeros(&grid);
        let dir = std::env::temp_dir().join("parabound_csv_test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.csv");
        write_field_csv(&path, &field).unwrap();
        let other = SpaceTimeGrid::new(BoxDomain::unit_interval(), 1.0, 2, vec![5]).unwrap();
        assert!(read_field_csv(&path, &other).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
