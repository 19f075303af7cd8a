//! Observation sets on the lattice: equidistributed unions of cubes,
//! thickness scans and punctures.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{lattice_multiple, LatticeBox};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskKind {
    Full,
    Empty,
    Equidistributed,
    Punctured { center: Vec<f64>, radius: f64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskMeta {
    pub kind: MaskKind,
    /// Cell size `L` of the construction, if any.
    pub cell: Option<f64>,
    /// Filling fraction `γ` of the construction, if any.
    pub gamma: Option<f64>,
}

/// Indicator of `ω ∩ h Z^d` on the interior nodes of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMask {
    domain: LatticeBox,
    inside: Vec<bool>,
    meta: MaskMeta,
}

impl ObservationMask {
    pub fn full(domain: &LatticeBox) -> Self {
        Self {
            domain: domain.clone(),
            inside: vec![true; domain.len()],
            meta: MaskMeta {
                kind: MaskKind::Full,
                cell: None,
                gamma: Some(1.0),
            },
        }
    }

    pub fn empty(domain: &LatticeBox) -> Self {
        Self {
            domain: domain.clone(),
            inside: vec![false; domain.len()],
            meta: MaskMeta {
                kind: MaskKind::Empty,
                cell: None,
                gamma: Some(0.0),
            },
        }
    }

    /// Nodes whose coordinates satisfy `pred`.
    pub fn from_fn(domain: &LatticeBox, pred: impl Fn(&[f64]) -> bool) -> Self {
        Self {
            inside: (0..domain.len()).map(|p| pred(&domain.point(p))).collect(),
            domain: domain.clone(),
            meta: MaskMeta {
                kind: MaskKind::Custom,
                cell: None,
                gamma: None,
            },
        }
    }

    pub fn from_bools(domain: &LatticeBox, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != domain.len() {
            return Err(Error::BoxMismatch(format!(
                "{} flags for a box of {} nodes",
                inside.len(),
                domain.len()
            )));
        }
        Ok(Self {
            domain: domain.clone(),
            inside,
            meta: MaskMeta {
                kind: MaskKind::Custom,
                cell: None,
                gamma: None,
            },
        })
    }

    pub fn domain(&self) -> &LatticeBox {
        &self.domain
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    pub fn meta(&self) -> &MaskMeta {
        &self.meta
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn density(&self) -> f64 {
        self.count() as f64 / self.inside.len() as f64
    }

    pub fn contains(&self, index: &[i64]) -> bool {
        self.domain.position(index).is_some_and(|p| self.inside[p])
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.domain == other.domain && self.inside.iter().zip(&other.inside).all(|(a, b)| !a || *b)
    }

    /// Indicator as 0/1 weights in node order.
    pub fn weights(&self) -> Vec<f64> {
        self.inside.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    /// The mask with every node of the open cube `|x - x0|_∞ < R/2` removed.
    pub fn punctured(&self, center: &[f64], radius: f64) -> Self {
        let half = radius / 2.0;
        let tol = 1e-9 * self.domain.h();
        let inside = self
            .inside
            .iter()
            .enumerate()
            .map(|(p, &b)| {
                b && !self
                    .domain
                    .point(p)
                    .iter()
                    .zip(center)
                    .all(|(x, c)| (x - c).abs() < half - tol)
            })
            .collect();
        Self {
            domain: self.domain.clone(),
            inside,
            meta: MaskMeta {
                kind: MaskKind::Punctured {
                    center: center.to_vec(),
                    radius,
                },
                ..self.meta.clone()
            },
        }
    }

    /// Indices of true nodes, one CSV row each.
    pub fn write_index_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (0..self.domain.dim()).map(|a| format!("k{a}")).collect();
        w.write_record(&header)?;
        for p in (0..self.inside.len()).filter(|&p| self.inside[p]) {
            w.write_record(self.domain.index(p).iter().map(|k| k.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Rows of `0`/`1` along the last axis.
    pub fn to_bitmap(&self) -> String {
        let row = *self.domain.counts().last().expect("nonempty dimension");
        let mut s = String::with_capacity(self.inside.len() + self.inside.len() / row);
        for chunk in self.inside.chunks(row) {
            s.extend(chunk.iter().map(|&b| if b { '1' } else { '0' }));
            s.push('\n');
        }
        s
    }
}

/// Union of closed cubes `z_k + [-γL/2, γL/2]^d` with `z_k = L k + offset(k)`
/// over all cells `L k + [-L/2, L/2]^d` meeting the box. A sub-cube holding
/// no lattice node contributes the node nearest to `z_k`.
pub fn periodic_equidistributed(
    domain: &LatticeBox,
    l: f64,
    gamma: f64,
    offset: impl Fn(&[i64]) -> Vec<f64>,
) -> Result<ObservationMask> {
    let h = domain.h();
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Domain(format!("γ = {gamma} must lie in (0, 1]")));
    }
    if lattice_multiple(l / 2.0, h).is_none_or(|m| m <= 0) {
        return Err(Error::Domain(format!("L/2 = {} is not a multiple of h = {h}", l / 2.0)));
    }
    let d = domain.dim();
    let hi = domain.hi();
    let cell_range: Vec<(i64, i64)> = (0..d)
        .map(|a| {
            let lo_x = domain.lo()[a] as f64 * h;
            let hi_x = hi[a] as f64 * h;
            ((lo_x / l).floor() as i64 - 1, (hi_x / l).ceil() as i64 + 1)
        })
        .collect();
    let half = gamma * l / 2.0;
    let eps = 1e-9;
    let mut inside = vec![false; domain.len()];
    let mut cell = cell_range.iter().map(|r| r.0).collect::<Vec<_>>();
    loop {
        let z: Vec<f64> = {
            let off = offset(&cell);
            if off.len() != d {
                return Err(Error::Domain("offset has the wrong dimension".into()));
            }
            for (a, o) in off.iter().enumerate() {
                if o.abs() + half > l / 2.0 * (1.0 + eps) {
                    return Err(Error::Domain(format!(
                        "offset {o} on axis {a} pushes the sub-cube out of cell {cell:?}"
                    )));
                }
            }
            cell.iter().zip(&off).map(|(&k, o)| k as f64 * l + o).collect()
        };
        let ranges: Vec<(i64, i64)> = z
            .iter()
            .map(|&c| {
                let a = ((c - half) / h - eps).ceil() as i64;
                let b = ((c + half) / h + eps).floor() as i64;
                if a <= b {
                    (a, b)
                } else {
                    let r = (c / h).round() as i64;
                    (r, r)
                }
            })
            .collect();
        mark_product(domain, &ranges, &mut inside);
        // advance the cell odometer
        let mut axis = d;
        loop {
            if axis == 0 {
                return Ok(ObservationMask {
                    domain: domain.clone(),
                    inside,
                    meta: MaskMeta {
                        kind: MaskKind::Equidistributed,
                        cell: Some(l),
                        gamma: Some(gamma),
                    },
                });
            }
            axis -= 1;
            if cell[axis] < cell_range[axis].1 {
                cell[axis] += 1;
                break;
            }
            cell[axis] = cell_range[axis].0;
        }
    }
}

fn mark_product(domain: &LatticeBox, ranges: &[(i64, i64)], inside: &mut [bool]) {
    let hi = domain.hi();
    let clipped: Vec<(i64, i64)> = ranges
        .iter()
        .enumerate()
        .map(|(a, &(s, e))| (s.max(domain.lo()[a]), e.min(hi[a])))
        .collect();
    if clipped.iter().any(|(s, e)| s > e) {
        return;
    }
    let mut k: Vec<i64> = clipped.iter().map(|r| r.0).collect();
    loop {
        let p = domain.position(&k).expect("clipped to box");
        inside[p] = true;
        let mut axis = k.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if k[axis] < clipped[axis].1 {
                k[axis] += 1;
                break;
            }
            k[axis] = clipped[axis].0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessReport {
    /// Minimum fraction of true nodes over all scanned cubes.
    pub gamma_min: f64,
    pub worst_center: Vec<f64>,
    pub cubes_scanned: usize,
    /// Nodes per scanned cube.
    pub cube_nodes: usize,
}

/// Scans every closed cube `x + [-L/2, L/2]^d` centred at a node and lying
/// inside the box, reporting the smallest fraction of observed nodes.
pub fn thickness_report(mask: &ObservationMask, l: f64) -> Result<ThicknessReport> {
    let dom = mask.domain();
    let h = dom.h();
    let r = (l / (2.0 * h) + 1e-9).floor() as usize;
    let side = 2 * r + 1;
    if let Some(a) = dom.counts().iter().position(|&c| c < side) {
        return Err(Error::Domain(format!(
            "scale L = {l} needs {side} nodes but axis {a} has {}",
            dom.counts()[a]
        )));
    }
    let d = dom.dim();
    let ext: Vec<usize> = dom.counts().iter().map(|c| c + 1).collect();
    let ext_stride: Vec<usize> = (0..d).map(|a| ext[a + 1..].iter().product()).collect();
    let total: usize = ext.iter().product();
    // summed-area table with a zero layer in front of every axis
    let mut sat = vec![0u32; total];
    let mut k = vec![0i64; d];
    for p in 0..dom.len() {
        dom.index_into(p, &mut k);
        let q: usize = (0..d)
            .map(|a| (k[a] - dom.lo()[a] + 1) as usize * ext_stride[a])
            .sum();
        sat[q] = mask.inside[p] as u32;
    }
    for a in 0..d {
        for q in 0..total {
            let coord = (q / ext_stride[a]) % ext[a];
            if coord > 0 {
                sat[q] += sat[q - ext_stride[a]];
            }
        }
    }
    let centers: Vec<usize> = dom.counts().iter().map(|c| c - 2 * r).collect();
    let n_centers: usize = centers.iter().product();
    let cube_nodes = side.pow(d as u32);
    let counts: Vec<(u32, usize)> = (0..n_centers)
        .into_par_iter()
        .map(|ci| {
            let mut rem = ci;
            let mut lo_off = vec![0usize; d];
            for a in (0..d).rev() {
                lo_off[a] = rem % centers[a];
                rem /= centers[a];
            }
            let mut s: i64 = 0;
            for corner in 0..(1usize << d) {
                let mut q = 0;
                let mut sign = 1i64;
                for a in 0..d {
                    if corner >> a & 1 == 1 {
                        q += (lo_off[a] + side) * ext_stride[a];
                    } else {
                        q += lo_off[a] * ext_stride[a];
                        sign = -sign;
                    }
                }
                s += sign * sat[q] as i64;
            }
            (s as u32, ci)
        })
        .collect();
    let &(min_count, worst) = counts
        .iter()
        .min_by_key(|(c, i)| (*c, *i))
        .expect("at least one cube");
    let mut rem = worst;
    let mut center = vec![0.0; d];
    for a in (0..d).rev() {
        let off = rem % centers[a];
        rem /= centers[a];
        center[a] = (dom.lo()[a] + (off + r) as i64) as f64 * h;
    }
    Ok(ThicknessReport {
        gamma_min: min_count as f64 / cube_nodes as f64,
        worst_center: center,
        cubes_scanned: n_centers,
        cube_nodes,
    })
}
