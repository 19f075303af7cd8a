use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A truncated box of the lattice `h Z^d` with Dirichlet-zero exterior.
///
/// Nodes are addressed by integer index vectors; the coordinate of index `k`
/// along an axis is exactly `k * h`. Interior nodes along axis `j` run over
/// `lo[j] .. lo[j] + counts[j]`, ordered lexicographically with the last axis
/// fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeBox {
    h: f64,
    lo: Vec<i64>,
    counts: Vec<usize>,
}

const GRID_TOL: f64 = 1e-9;

/// Rounds `x / h` to an integer when it is one up to a relative tolerance.
pub(crate) fn lattice_multiple(x: f64, h: f64) -> Option<i64> {
    let r = x / h;
    let k = r.round();
    ((r - k).abs() <= GRID_TOL * r.abs().max(1.0)).then_some(k as i64)
}

impl LatticeBox {
    /// Box `(-half_width, half_width)^d`; the faces `±half_width` are the
    /// Dirichlet boundary, so each axis carries `2 half_width / h - 1`
    /// interior nodes.
    pub fn centered(dim: usize, h: f64, half_width: f64) -> Result<Self> {
        Self::centered_axes(h, &vec![half_width; dim])
    }

    pub fn centered_axes(h: f64, half_widths: &[f64]) -> Result<Self> {
        if half_widths.is_empty() {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("mesh h = {h} must be positive")));
        }
        let mut lo = Vec::with_capacity(half_widths.len());
        let mut counts = Vec::with_capacity(half_widths.len());
        for (axis, &w) in half_widths.iter().enumerate() {
            let m = lattice_multiple(w, h).filter(|&m| m > 0).ok_or_else(|| {
                Error::Domain(format!(
                    "half width {w} on axis {axis} is not a positive multiple of h = {h}"
                ))
            })?;
            lo.push(1 - m);
            counts.push((2 * m - 1) as usize);
        }
        Self::from_parts(h, lo, counts)
    }

    /// Box with `counts[j]` interior nodes starting at index `lo[j]`.
    pub fn from_parts(h: f64, lo: Vec<i64>, counts: Vec<usize>) -> Result<Self> {
        if lo.len() != counts.len() || lo.is_empty() {
            return Err(Error::Domain(
                "lo and counts must be nonempty and of equal length".into(),
            ));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("mesh h = {h} must be positive")));
        }
        if let Some(axis) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Domain(format!("axis {axis} has no interior nodes")));
        }
        Ok(Self { h, lo, counts })
    }

    /// Interior nodes of the open cube `center + (-half_side, half_side)^d`.
    /// `center` and `half_side` must be lattice-aligned.
    pub fn open_cube(h: f64, center: &[f64], half_side: f64) -> Result<Self> {
        let m = lattice_multiple(half_side, h)
            .filter(|&m| m > 0)
            .ok_or_else(|| Error::Domain(format!("half side {half_side} is not a multiple of h")))?;
        let mut lo = Vec::new();
        for &c in center {
            let k = lattice_multiple(c, h)
                .ok_or_else(|| Error::Domain(format!("center coordinate {c} is not a lattice point")))?;
            lo.push(k - m + 1);
        }
        Self::from_parts(h, lo, vec![(2 * m - 1) as usize; center.len()])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    /// Last interior index on each axis.
    pub fn hi(&self) -> Vec<i64> {
        self.lo
            .iter()
            .zip(&self.counts)
            .map(|(&l, &c)| l + c as i64 - 1)
            .collect()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lower and upper boundary coordinates (first exterior nodes) per axis.
    pub fn extent(&self, axis: usize) -> (f64, f64) {
        let lo = self.lo[axis] - 1;
        let hi = self.lo[axis] + self.counts[axis] as i64;
        (lo as f64 * self.h, hi as f64 * self.h)
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.dim() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "axis {axis} out of range for a {}-dimensional box",
                self.dim()
            )))
        }
    }

    /// Linear offset between consecutive nodes along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.counts[axis + 1..].iter().product()
    }

    /// Linear position of an interior index, or `None` outside the box.
    pub fn position(&self, index: &[i64]) -> Option<usize> {
        debug_assert_eq!(index.len(), self.dim());
        let mut pos = 0usize;
        for ((&k, &lo), &n) in index.iter().zip(&self.lo).zip(&self.counts) {
            let off = k - lo;
            if off < 0 || off as usize >= n {
                return None;
            }
            pos = pos * n + off as usize;
        }
        Some(pos)
    }

    /// Integer index of the node at linear position `pos`.
    pub fn index(&self, pos: usize) -> Vec<i64> {
        let mut out = vec![0; self.dim()];
        self.index_into(pos, &mut out);
        out
    }

    pub fn index_into(&self, mut pos: usize, out: &mut [i64]) {
        for axis in (0..self.dim()).rev() {
            let n = self.counts[axis];
            out[axis] = self.lo[axis] + (pos % n) as i64;
            pos /= n;
        }
    }

    /// Coordinates `h k` of the node at linear position `pos`.
    pub fn point(&self, pos: usize) -> Vec<f64> {
        self.index(pos).into_iter().map(|k| k as f64 * self.h).collect()
    }

    /// Lattice index of a coordinate vector, or an error when `x` is not on `h Z^d`.
    pub fn lattice_index(&self, x: &[f64]) -> Result<Vec<i64>> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!(
                "point has {} coordinates, box has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        x.iter()
            .map(|&c| {
                lattice_multiple(c, self.h)
                    .ok_or_else(|| Error::Domain(format!("coordinate {c} is not a multiple of h = {}", self.h)))
            })
            .collect()
    }

    /// The same box extended by `low` nodes below and `high` nodes above on `axis`.
    pub fn grown(&self, axis: usize, low: usize, high: usize) -> Self {
        let mut out = self.clone();
        out.lo[axis] -= low as i64;
        out.counts[axis] += low + high;
        out
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        self.dim() == other.dim()
            && self.h == other.h
            && (0..self.dim()).all(|a| {
                other.lo[a] >= self.lo[a]
                    && other.lo[a] + other.counts[a] as i64 <= self.lo[a] + self.counts[a] as i64
            })
    }

    /// Whether the box holds every node of the closed cube `center + [-r, r]^d`.
    pub fn contains_closed_cube(&self, center: &[f64], r: f64) -> bool {
        (0..self.dim()).all(|a| {
            let lo = self.lo[a] as f64 * self.h;
            let hi = (self.lo[a] + self.counts[a] as i64 - 1) as f64 * self.h;
            let eps = GRID_TOL * self.h;
            center[a] - r >= lo - self.h + eps && center[a] + r <= hi + self.h - eps
        })
    }

    /// Stable textual key used for hashing and caches.
    pub fn key(&self) -> String {
        format!("h={:e};lo={:?};n={:?}", self.h, self.lo, self.counts)
    }
}
