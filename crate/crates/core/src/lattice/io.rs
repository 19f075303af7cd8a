//! Field serialization: CSV rows `(k_1, ..., k_d, value)` and flat
//! little-endian `f64` in node order.

use std::io::{Read, Write};

use super::{LatticeBox, ScalarField};
use crate::error::{Error, Result};

pub fn write_csv<W: Write>(field: &ScalarField<f64>, writer: W) -> Result<()> {
    let dom = field.domain();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..dom.dim()).map(|a| format!("k{a}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    for (p, v) in field.values().iter().enumerate() {
        let mut row: Vec<String> = dom.index(p).iter().map(|k| k.to_string()).collect();
        row.push(format!("{v:e}"));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Reads `(index, value)` rows; nodes not listed are zero, nodes outside the box are rejected.
pub fn read_csv<R: Read>(domain: &LatticeBox, reader: R) -> Result<ScalarField<f64>> {
    let mut field = ScalarField::zeros(domain);
    let mut rdr = csv::Reader::from_reader(reader);
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != domain.dim() + 1 {
            return Err(Error::Domain(format!(
                "row {line}: expected {} columns, found {}",
                domain.dim() + 1,
                rec.len()
            )));
        }
        let parse_err = |s: &str| Error::Domain(format!("row {line}: cannot parse `{s}`"));
        let idx = rec
            .iter()
            .take(domain.dim())
            .map(|s| s.trim().parse::<i64>().map_err(|_| parse_err(s)))
            .collect::<Result<Vec<_>>>()?;
        let val_str = rec.get(domain.dim()).unwrap_or_default().trim();
        let value: f64 = val_str.parse().map_err(|_| parse_err(val_str))?;
        let pos = domain
            .position(&idx)
            .ok_or_else(|| Error::Domain(format!("row {line}: index {idx:?} outside the box")))?;
        field.values_mut()[pos] = value;
    }
    Ok(field)
}

pub fn to_bytes(field: &ScalarField<f64>) -> Vec<u8> {
    field.values().iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn from_bytes(domain: &LatticeBox, bytes: &[u8]) -> Result<ScalarField<f64>> {
    if bytes.len() != 8 * domain.len() {
        return Err(Error::BoxMismatch(format!(
            "{} bytes for a box of {} nodes",
            bytes.len(),
            domain.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ScalarField::from_values(domain, values)
}
