use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{periodic_equidistributed, ObservationMask};
use crate::lattice::{LatticeBox, ScalarField};
use crate::potentials::PotentialExpr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub dim: usize,
    pub half_width: f64,
}

impl BoxConfig {
    pub fn build(&self, h: f64) -> Result<LatticeBox> {
        LatticeBox::centered(self.dim, h, self.half_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskConfig {
    Full,
    Equidistributed {
        cell: f64,
        gamma: f64,
        #[serde(default)]
        offset: Vec<f64>,
    },
    Punctured {
        base: Box<MaskConfig>,
        center: Vec<f64>,
        radius: f64,
    },
}

impl MaskConfig {
    pub fn build(&self, domain: &LatticeBox) -> Result<ObservationMask> {
        match self {
            Self::Full => Ok(ObservationMask::full(domain)),
            Self::Equidistributed { cell, gamma, offset } => {
                let off = if offset.is_empty() {
                    vec![0.0; domain.dim()]
                } else {
                    offset.clone()
                };
                periodic_equidistributed(domain, *cell, *gamma, |_| off.clone())
            }
            Self::Punctured { base, center, radius } => Ok(base.build(domain)?.punctured(center, *radius)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    /// Independent uniform values in `[-1, 1]` drawn from the run seed.
    Random,
    Gaussian { width: f64 },
    /// The `k`-th eigenvector of the run's operator.
    Mode { k: usize },
}

impl InitialData {
    /// `mode` supplies eigenvectors for [`InitialData::Mode`].
    pub fn build(
        &self,
        domain: &LatticeBox,
        seed: u64,
        mode: impl FnOnce(usize) -> Result<ScalarField<f64>>,
    ) -> Result<ScalarField<f64>> {
        match self {
            Self::Zero => Ok(ScalarField::zeros(domain)),
            Self::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(ScalarField::from_fn(domain, |_| rng.random_range(-1.0..=1.0)))
            }
            Self::Gaussian { width } => Ok(ScalarField::from_fn(domain, |x| {
                (-x.iter().map(|v| v * v).sum::<f64>() / (width * width)).exp()
            })),
            Self::Mode { k } => mode(*k),
        }
    }
}

fn zero_potential() -> PotentialExpr {
    PotentialExpr::Constant { value: 0.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalculusParams {
    pub dims: Vec<usize>,
    pub fields: usize,
    pub h: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorParams {
    /// 1-D interior node counts checked against the closed-form spectrum.
    pub path_sizes: Vec<usize>,
    /// Per-axis node counts of the 2-D tensor-sum check.
    pub tensor_sizes: Vec<usize>,
    pub h: f64,
    pub potential: PotentialExpr,
    /// Box for the projector and semigroup algebra.
    pub algebra_box: BoxConfig,
    pub mu_fractions: Vec<f64>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationParams {
    pub domain: BoxConfig,
    pub hs: Vec<f64>,
    pub potential: PotentialExpr,
    pub beta: f64,
    pub c: f64,
    /// Thresholds as multiples of the ground-state energy.
    pub mu_multiples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaccioppoliParams {
    pub cube_sides: Vec<f64>,
    pub hs: Vec<f64>,
    pub potentials: Vec<PotentialExpr>,
    pub solves: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatKernelParams {
    pub taus: Vec<f64>,
    pub displacements: Vec<i64>,
    /// `(d, h, t)` triples for the `ℓ^2` asymptotics.
    pub ell2: Vec<(usize, f64, f64)>,
    pub zeta_grid: Vec<f64>,
    pub tail_dim: usize,
    pub tail_h: f64,
    pub tail_t: f64,
    pub tail_radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeynmanKacParams {
    pub domain: BoxConfig,
    pub h: f64,
    pub potentials: Vec<PotentialExpr>,
    pub times: Vec<f64>,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralParams {
    pub domain: BoxConfig,
    pub hs: Vec<f64>,
    pub potentials: Vec<PotentialExpr>,
    pub mask: MaskConfig,
    pub eps0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlParams {
    pub domain: BoxConfig,
    pub hs: Vec<f64>,
    pub horizons: Vec<f64>,
    pub rho: f64,
    pub eps0: f64,
    #[serde(default = "zero_potential")]
    pub potential: PotentialExpr,
    pub mask: MaskConfig,
    pub initial: InitialData,
    #[serde(default)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservabilityParams {
    pub domain: BoxConfig,
    pub h: f64,
    pub horizons: Vec<f64>,
    pub levels: Vec<usize>,
    pub eps0: f64,
    #[serde(default = "zero_potential")]
    pub potential: PotentialExpr,
    pub mask: MaskConfig,
    pub terminal: InitialData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlemanParams {
    pub hs: Vec<f64>,
    pub s: f64,
    pub t_star: f64,
    pub lambda: f64,
    pub target: f64,
    pub modes: usize,
    pub time_samples: usize,
    pub s0: f64,
    pub eps0: f64,
    pub cell: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NecessityParams {
    pub domain: BoxConfig,
    pub hs: Vec<f64>,
    pub radii: Vec<f64>,
    pub horizon: f64,
    pub x0: Vec<f64>,
    #[serde(default = "zero_potential")]
    pub potential: PotentialExpr,
    pub mask: MaskConfig,
    #[serde(default)]
    pub remainder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Experiment {
    Calculus(CalculusParams),
    Operator(OperatorParams),
    Localization(LocalizationParams),
    Caccioppoli(CaccioppoliParams),
    #[serde(rename = "heatkernel")]
    HeatKernel(HeatKernelParams),
    FeynmanKac(FeynmanKacParams),
    Spectral(SpectralParams),
    Control(ControlParams),
    Observability(ObservabilityParams),
    Carleman(CarlemanParams),
    Necessity(NecessityParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Calculus(_) => "calculus",
            Self::Operator(_) => "operator",
            Self::Localization(_) => "localization",
            Self::Caccioppoli(_) => "caccioppoli",
            Self::HeatKernel(_) => "heatkernel",
            Self::FeynmanKac(_) => "feynman_kac",
            Self::Spectral(_) => "spectral",
            Self::Control(_) => "control",
            Self::Observability(_) => "observability",
            Self::Carleman(_) => "carleman",
            Self::Necessity(_) => "necessity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

/// A check on the run's results, addressed by a dotted path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub path: String,
    pub op: Comparison,
    pub value: Value,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assertions: Vec<Assertion>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &[])
    }

    /// Parses a config after applying `key=value` overrides; values parse as
    /// JSON and fall back to strings. Keys are dotted paths.
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text)?;
        apply_overrides(&mut value, overrides)?;
        serde_json::from_value(value).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks every referenced parameter before any computation.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} = {v} must be positive"));
            }
        };
        match &self.experiment {
            Experiment::Calculus(p) => {
                positive("params.h", p.h);
                positive("params.half_width", p.half_width);
            }
            Experiment::Operator(p) => {
                positive("params.h", p.h);
                p.times.iter().for_each(|&t| positive("params.times[]", t));
            }
            Experiment::Localization(p) => {
                positive("params.beta", p.beta);
                positive("params.c", p.c);
                p.hs.iter().for_each(|&h| positive("params.hs[]", h));
            }
            Experiment::Caccioppoli(p) => {
                p.hs.iter().for_each(|&h| positive("params.hs[]", h));
                p.cube_sides.iter().for_each(|&l| positive("params.cube_sides[]", l));
            }
            Experiment::HeatKernel(p) => {
                positive("params.tail_h", p.tail_h);
                positive("params.tail_t", p.tail_t);
            }
            Experiment::FeynmanKac(p) => {
                positive("params.h", p.h);
                p.times.iter().for_each(|&t| positive("params.times[]", t));
            }
            Experiment::Spectral(p) => {
                positive("params.eps0", p.eps0);
                p.hs.iter().for_each(|&h| positive("params.hs[]", h));
            }
            Experiment::Control(p) => {
                positive("params.eps0", p.eps0);
                p.hs.iter().for_each(|&h| positive("params.hs[]", h));
                p.horizons.iter().for_each(|&t| positive("params.horizons[]", t));
                if !(p.rho > 0.0 && p.rho < 1.0) {
                    bad.push(format!("params.rho = {} must lie in (0, 1)", p.rho));
                }
            }
            Experiment::Observability(p) => {
                positive("params.h", p.h);
                positive("params.eps0", p.eps0);
                p.horizons.iter().for_each(|&t| positive("params.horizons[]", t));
            }
            Experiment::Carleman(p) => {
                positive("params.s", p.s);
                positive("params.t_star", p.t_star);
                positive("params.lambda", p.lambda);
                p.hs.iter().for_each(|&h| positive("params.hs[]", h));
                if p.time_samples < 3 {
                    bad.push("params.time_samples must be at least 3".into());
                }
            }
            Experiment::Necessity(p) => {
                positive("params.horizon", p.horizon);
                p.hs.iter().for_each(|&h| positive("params.hs[]", h));
                if p.radii.iter().any(|r| !(*r >= 0.0)) {
                    bad.push("params.radii must be nonnegative".into());
                }
            }
        }
        for (name, hs, domain) in self.boxes() {
            for h in hs {
                if h > 0.0 {
                    if let Err(e) = domain.build(h) {
                        bad.push(format!("{name} at h = {h}: {e}"));
                    }
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    fn boxes(&self) -> Vec<(&'static str, Vec<f64>, BoxConfig)> {
        match &self.experiment {
            Experiment::Localization(p) => vec![("params.domain", p.hs.clone(), p.domain.clone())],
            Experiment::FeynmanKac(p) => vec![("params.domain", vec![p.h], p.domain.clone())],
            Experiment::Spectral(p) => vec![("params.domain", p.hs.clone(), p.domain.clone())],
            Experiment::Control(p) => vec![("params.domain", p.hs.clone(), p.domain.clone())],
            Experiment::Observability(p) => vec![("params.domain", vec![p.h], p.domain.clone())],
            Experiment::Necessity(p) => vec![("params.domain", p.hs.clone(), p.domain.clone())],
            Experiment::Operator(p) => vec![("params.algebra_box", vec![p.h], p.algebra_box.clone())],
            _ => vec![],
        }
    }
}

/// Sets `a.b.c = value` inside a JSON object, creating objects on the way.
pub fn apply_overrides(root: &mut Value, overrides: &[String]) -> Result<()> {
    let mut bad = Vec::new();
    for item in overrides {
        let Some((key, raw)) = item.split_once('=') else {
            bad.push(format!("override `{item}` is not key=value"));
            continue;
        };
        let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut *root;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let Value::Object(map) = node else {
                bad.push(format!("override `{key}`: `{part}` is inside a non-object"));
                break;
            };
            if i + 1 == parts.len() {
                map.insert(part.to_string(), parsed.clone());
                break;
            }
            node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(bad))
    }
}
