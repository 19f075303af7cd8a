use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::lattice::ScalarField;

pub(super) fn key_for(potential: &ScalarField<f64>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(potential.domain().key().as_bytes());
    for v in potential.values() {
        hasher.update(v.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

/// On-disk store of decompositions keyed by a hash of the box and the
/// potential's node values.
#[derive(Debug, Clone)]
pub struct DecompositionCache {
    dir: PathBuf,
}

impl DecompositionCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.eig"))
    }

    /// Loads a stored decomposition or computes and stores a new one.
    pub fn get_or_compute(&self, potential: &ScalarField<f64>) -> Result<SpectralDecomposition> {
        let key = key_for(potential);
        let path = self.path(&key);
        if let Ok(bytes) = fs::read(&path) {
            if let Some(dec) = decode(potential, &bytes) {
                return Ok(dec);
            }
        }
        let dec = SpectralDecomposition::new(potential)?;
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&encode(&dec)).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(dec)
    }
}

fn encode(dec: &SpectralDecomposition) -> Vec<u8> {
    let n = dec.len();
    let mut out = Vec::with_capacity(8 * (1 + n + n * n));
    out.extend((n as u64).to_le_bytes());
    for v in dec.eigenvalues().iter().chain(dec.eigenvectors().iter()) {
        out.extend(v.to_le_bytes());
    }
    out
}

fn decode(potential: &ScalarField<f64>, bytes: &[u8]) -> Option<SpectralDecomposition> {
    let n = u64::from_le_bytes(bytes.get(..8)?.try_into().ok()?) as usize;
    if n != potential.domain().len() || bytes.len() != 8 * (1 + n + n * n) {
        return None;
    }
    let mut vals = bytes[8..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let eigenvalues: Vec<f64> = vals.by_ref().take(n).collect();
    let eigenvectors = DMatrix::from_iterator(n, n, vals);
    let dec = SpectralDecomposition::from_parts(potential.clone(), eigenvalues, eigenvectors);
    let ok = dec
        .residuals()
        .iter()
        .zip(dec.eigenvalues())
        .all(|(r, l)| *r <= 1e-10 * l.abs().max(1.0));
    ok.then_some(dec)
}

/// Writes `k, lambda` rows.
pub fn write_eigenvalues_csv<W: Write>(dec: &SpectralDecomposition, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "lambda"])?;
    for (k, l) in dec.eigenvalues().iter().enumerate() {
        w.write_record([k.to_string(), format!("{l:.17e}")])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
