//! Potentials `V`, their restriction to a box, box sup-norms and the
//! power-growth envelope check.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, ScalarField};

/// Closed-form potential expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PotentialExpr {
    Constant { value: f64 },
    /// `amplitude * Σ_j sin(frequency * x_j)`.
    Sine { amplitude: f64, frequency: f64 },
    /// `coefficient * |x|^exponent` with the Euclidean norm.
    Power { coefficient: f64, exponent: f64 },
    /// Node values read from a file; zero off the table.
    Tabulated(TabulatedPotential),
    Sum { terms: Vec<PotentialExpr> },
}

impl PotentialExpr {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Sine {
                amplitude,
                frequency,
            } => amplitude * x.iter().map(|&c| (frequency * c).sin()).sum::<f64>(),
            Self::Power {
                coefficient,
                exponent,
            } => coefficient * euclid(x).powf(*exponent),
            Self::Tabulated(t) => t.value(x),
            Self::Sum { terms } => terms.iter().map(|t| t.value(x)).sum(),
        }
    }

    /// Analytic gradient, `None` where the expression carries none.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            Self::Constant { .. } => Some(vec![0.0; x.len()]),
            Self::Sine {
                amplitude,
                frequency,
            } => Some(
                x.iter()
                    .map(|&c| amplitude * frequency * (frequency * c).cos())
                    .collect(),
            ),
            Self::Power {
                coefficient,
                exponent,
            } => {
                let r = euclid(x);
                if r == 0.0 {
                    return (*exponent >= 1.0).then(|| vec![0.0; x.len()]);
                }
                let s = coefficient * exponent * r.powf(exponent - 2.0);
                Some(x.iter().map(|&c| s * c).collect())
            }
            Self::Tabulated(_) => None,
            Self::Sum { terms } => {
                let mut g = vec![0.0; x.len()];
                for t in terms {
                    for (a, b) in g.iter_mut().zip(t.gradient(x)?) {
                        *a += b;
                    }
                }
                Some(g)
            }
        }
    }

    pub fn has_gradient(&self) -> bool {
        match self {
            Self::Tabulated(_) => false,
            Self::Sum { terms } => terms.iter().all(Self::has_gradient),
            _ => true,
        }
    }

    /// `max |V|` over the interior nodes of `domain`.
    pub fn linf_on(&self, domain: &LatticeBox) -> f64 {
        (0..domain.len())
            .map(|p| self.value(&domain.point(p)).abs())
            .fold(0.0, f64::max)
    }

    /// `max |V| + max |∇V|` over the interior nodes of `domain`.
    pub fn w1inf_on(&self, domain: &LatticeBox) -> Result<f64> {
        let mut grad_max: f64 = 0.0;
        for p in 0..domain.len() {
            let x = domain.point(p);
            let g = self.gradient(&x).ok_or_else(|| {
                Error::Capability("potential has no gradient evaluator at some node".into())
            })?;
            grad_max = grad_max.max(euclid(&g));
        }
        Ok(self.linf_on(domain) + grad_max)
    }
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Potential given by node values on `h Z^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TableRepr", into = "TableRepr")]
pub struct TabulatedPotential {
    h: f64,
    table: HashMap<Vec<i64>, f64>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    h: f64,
    entries: Vec<(Vec<i64>, f64)>,
}

impl From<TableRepr> for TabulatedPotential {
    fn from(r: TableRepr) -> Self {
        Self {
            h: r.h,
            table: r.entries.into_iter().collect(),
        }
    }
}

impl From<TabulatedPotential> for TableRepr {
    fn from(t: TabulatedPotential) -> Self {
        let mut entries: Vec<_> = t.table.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        Self { h: t.h, entries }
    }
}

impl TabulatedPotential {
    pub fn new(h: f64, entries: impl IntoIterator<Item = (Vec<i64>, f64)>) -> Self {
        Self {
            h,
            table: entries.into_iter().collect(),
        }
    }

    /// Reads CSV rows `k_1, ..., k_d, value` with a header line.
    pub fn from_csv<R: Read>(h: f64, dim: usize, reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut table = HashMap::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = || Error::Domain(format!("potential table row {line} is malformed"));
            if rec.len() != dim + 1 {
                return Err(bad());
            }
            let idx = rec
                .iter()
                .take(dim)
                .map(|s| s.trim().parse::<i64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            let v = rec[dim].trim().parse::<f64>().map_err(|_| bad())?;
            table.insert(idx, v);
        }
        Ok(Self { h, table })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let idx: Vec<i64> = x.iter().map(|&c| (c / self.h).round() as i64).collect();
        self.table.get(&idx).copied().unwrap_or(0.0)
    }
}

/// Regularity class a potential is declared under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    BoundedContinuous,
    #[serde(rename = "bounded_c1")]
    BoundedC1,
    PowerGrowth,
}

/// Growth data for power-growth potentials: `V ≥ c0 |x|^β1` and
/// `c1 |x|^β1 ≤ |∇V1| + |V1| + |V2|^{4/3} ≤ c2 |x|^β2` with `V = V1 + V2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEnvelope {
    pub beta1: f64,
    pub beta2: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub v1: PotentialExpr,
    pub v2: PotentialExpr,
    /// Nodes with `|x| <= core_radius` are exempt from the envelope
    /// inequalities. Zero exempts only the origin.
    #[serde(default)]
    pub core_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub expr: PotentialExpr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<GrowthEnvelope>,
    /// Optional split `V = V1 + V2` for bounded potentials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<(PotentialExpr, PotentialExpr)>,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(value: f64) -> Self {
        Self::bounded_c1(PotentialExpr::Constant { value })
    }

    /// `amplitude * Σ sin(x_j)`.
    pub fn sine(amplitude: f64) -> Self {
        Self::bounded_c1(PotentialExpr::Sine {
            amplitude,
            frequency: 1.0,
        })
    }

    pub fn bounded(expr: PotentialExpr) -> Self {
        Self {
            kind: PotentialKind::BoundedContinuous,
            expr,
            envelope: None,
            split: None,
        }
    }

    pub fn bounded_c1(expr: PotentialExpr) -> Self {
        Self {
            kind: PotentialKind::BoundedC1,
            expr,
            envelope: None,
            split: None,
        }
    }

    /// `|x|^β` with `V1 = V`, `V2 = 0`, `c0 = c1 = 1`, `c2 = 1 + β` and the
    /// unit ball exempt from the envelope (where `|∇V1|` is not dominated by
    /// `|x|^β`).
    pub fn power_law(beta: f64) -> Self {
        let expr = PotentialExpr::Power {
            coefficient: 1.0,
            exponent: beta,
        };
        Self {
            kind: PotentialKind::PowerGrowth,
            envelope: Some(GrowthEnvelope {
                beta1: beta,
                beta2: beta,
                c0: 1.0,
                c1: 1.0,
                c2: 1.0 + beta,
                v1: expr.clone(),
                v2: PotentialExpr::Constant { value: 0.0 },
                core_radius: 1.0,
            }),
            expr,
            split: None,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.expr.value(x)
    }

    /// The split `(V1, V2)`: declared envelope split, declared bounded
    /// split, or `(V, 0)`.
    pub fn parts(&self) -> (PotentialExpr, PotentialExpr) {
        if let Some(env) = &self.envelope {
            return (env.v1.clone(), env.v2.clone());
        }
        if let Some((a, b)) = &self.split {
            return (a.clone(), b.clone());
        }
        (self.expr.clone(), PotentialExpr::Constant { value: 0.0 })
    }
}

/// Samples `V(hk)` at every interior node.
pub fn restrict(spec: &PotentialSpec, domain: &LatticeBox) -> ScalarField<f64> {
    ScalarField::from_fn(domain, |x| spec.value(x))
}

pub fn restrict_expr(expr: &PotentialExpr, domain: &LatticeBox) -> ScalarField<f64> {
    ScalarField::from_fn(domain, |x| expr.value(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNorms {
    pub linf: f64,
    /// Present for `bounded_c1` potentials.
    pub w1inf: Option<f64>,
}

/// Box maxima of `|V|` and, for `bounded_c1`, `|V| + |∇V|`.
pub fn sup_norms(spec: &PotentialSpec, domain: &LatticeBox) -> Result<SupNorms> {
    let w1inf = match spec.kind {
        PotentialKind::BoundedC1 => Some(spec.expr.w1inf_on(domain)?),
        _ => None,
    };
    Ok(SupNorms {
        linf: spec.expr.linf_on(domain),
        w1inf,
    })
}

/// `‖V‖_{W^{1,∞}}` on the box; requires a gradient evaluator.
pub fn w1inf_norm(spec: &PotentialSpec, domain: &LatticeBox) -> Result<f64> {
    if spec.kind != PotentialKind::BoundedC1 {
        return Err(Error::Capability(format!(
            "W^1,inf norm needs a bounded_c1 potential, got {:?}",
            spec.kind
        )));
    }
    spec.expr.w1inf_on(domain)
}

/// Smallest normalized slack of each inequality over the box; negative
/// values are violations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionMargins {
    pub nonnegative: f64,
    pub lower_bound: f64,
    pub envelope_lower: f64,
    pub envelope_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub holds: bool,
    /// Node with the smallest margin across all inequalities.
    pub worst_node: Option<Vec<f64>>,
    pub worst_inequality: Option<String>,
    pub margins: AssumptionMargins,
    pub nodes_checked: usize,
}

const SLACK_TOL: f64 = 1e-12;

fn slack(big: f64, small: f64) -> f64 {
    (big - small) / (1.0 + big.abs() + small.abs())
}

/// Checks the power-growth inequalities at every node of the box.
pub fn assumption_a_check(spec: &PotentialSpec, domain: &LatticeBox) -> Result<AssumptionReport> {
    let env = spec.envelope.as_ref().ok_or_else(|| {
        Error::Capability("growth check needs a power-growth envelope".into())
    })?;
    let mut margins = AssumptionMargins {
        nonnegative: f64::INFINITY,
        lower_bound: f64::INFINITY,
        envelope_lower: f64::INFINITY,
        envelope_upper: f64::INFINITY,
    };
    let mut worst = (f64::INFINITY, None, None);
    let mut checked = 0;
    for p in 0..domain.len() {
        let x = domain.point(p);
        let r = euclid(&x);
        let v = spec.value(&x);
        let mut record = |m: f64, slot: &mut f64, name: &str| {
            *slot = slot.min(m);
            if m < worst.0 {
                worst = (m, Some(x.clone()), Some(name.to_string()));
            }
        };
        record(slack(v, 0.0), &mut margins.nonnegative, "nonnegative");
        if r == 0.0 || r <= env.core_radius {
            continue;
        }
        checked += 1;
        record(
            slack(v, env.c0 * r.powf(env.beta1)),
            &mut margins.lower_bound,
            "lower_bound",
        );
        let g = env.v1.gradient(&x).ok_or_else(|| {
            Error::Capability("V1 of the growth split has no gradient".into())
        })?;
        let mid = euclid(&g) + env.v1.value(&x).abs() + env.v2.value(&x).abs().powf(4.0 / 3.0);
        record(
            slack(mid, env.c1 * r.powf(env.beta1)),
            &mut margins.envelope_lower,
            "envelope_lower",
        );
        record(
            slack(env.c2 * r.powf(env.beta2), mid),
            &mut margins.envelope_upper,
            "envelope_upper",
        );
    }
    let holds = worst.0 >= -SLACK_TOL;
    Ok(AssumptionReport {
        holds,
        worst_node: worst.1,
        worst_inequality: worst.2,
        margins,
        nodes_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_restriction() {
        let b = LatticeBox::centered(1, 1.0, 2.0).unwrap();
        let f = restrict(&PotentialSpec::power_law(2.0), &b);
        assert_eq!(f.values(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_norms() {
        let b = LatticeBox::centered(2, 0.5, 2.0).unwrap();
        let n = sup_norms(&PotentialSpec::constant(3.0), &b).unwrap();
        assert_eq!(n.linf, 3.0);
        assert_eq!(n.w1inf, Some(3.0));
    }

    #[test]
    fn tabulated_has_no_gradient() {
        let b = LatticeBox::centered(1, 1.0, 2.0).unwrap();
        let t = TabulatedPotential::new(1.0, [(vec![0], 2.0)]);
        let spec = PotentialSpec::bounded_c1(PotentialExpr::Tabulated(t));
        assert!(matches!(w1inf_norm(&spec, &b), Err(Error::Capability(_))));
        assert!(matches!(sup_norms(&spec, &b), Err(Error::Capability(_))));
        let bounded = PotentialSpec::bounded(spec.expr.clone());
        assert!(matches!(w1inf_norm(&bounded, &b), Err(Error::Capability(_))));
        assert_eq!(restrict(&bounded, &b).values(), &[0.0, 2.0, 0.0]);
    }

    #[test]
    fn serde_round_trip() {
        let spec = PotentialSpec::power_law(1.5);
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<PotentialSpec>(&s).unwrap(), spec);
        let t = PotentialSpec::bounded(PotentialExpr::Tabulated(TabulatedPotential::new(
            0.5,
            [(vec![1, 2], 0.25)],
        )));
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<PotentialSpec>(&s).unwrap(), t);
    }
}
