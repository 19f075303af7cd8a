use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::{Assertion, Comparison, RunConfig};
use super::run::{execute, RunOutput};
use super::table::Table;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionOutcome {
    pub label: String,
    pub path: String,
    pub op: Comparison,
    pub expected: Value,
    pub actual: Value,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub name: String,
    pub kind: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
    pub created_unix: u64,
    pub results: Value,
    pub tables: Vec<String>,
    pub assertions: Vec<AssertionOutcome>,
}

impl Manifest {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Manifest plus tables of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunBundle {
    pub manifest: Manifest,
    pub tables: Vec<Table>,
}

impl RunBundle {
    /// Writes `manifest.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            t.write_csv(file)?;
        }
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// SHA-256 of the config's JSON form.
pub fn config_hash(config: &RunConfig) -> Result<String> {
    let canonical = serde_json::to_vec(&serde_json::to_value(config)?)?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

/// Looks up a dotted path; numeric segments index arrays.
pub fn lookup<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(root, |node, key| match node {
        Value::Object(map) => map.get(key),
        Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get(i)),
        _ => None,
    })
}

fn evaluate(a: &Assertion, results: &Value) -> AssertionOutcome {
    let actual = lookup(results, &a.path).cloned().unwrap_or(Value::Null);
    let passed = match (&actual, &a.value) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            match a.op {
                Comparison::Lt => x < y,
                Comparison::Le => x <= y,
                Comparison::Gt => x > y,
                Comparison::Ge => x >= y,
                Comparison::Eq => x == y,
            }
        }
        (x, y) => a.op == Comparison::Eq && x == y,
    };
    AssertionOutcome {
        label: a.label.clone().unwrap_or_else(|| a.path.clone()),
        path: a.path.clone(),
        op: a.op,
        expected: a.value.clone(),
        actual,
        passed,
    }
}

/// Validates, runs and evaluates the config's assertions. Nothing is written.
pub fn run(config: &RunConfig) -> Result<RunBundle> {
    config.validate()?;
    let RunOutput { results, tables } = execute(config)?;
    let assertions = config.assertions.iter().map(|a| evaluate(a, &results)).collect();
    let manifest = Manifest {
        tool: "latctl".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        name: config.name.clone(),
        kind: config.experiment.kind().into(),
        seed: config.seed,
        config_hash: config_hash(config)?,
        config: config.clone(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        results,
        tables: tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
        assertions,
    };
    Ok(RunBundle { manifest, tables })
}

/// Output directory: the config's own, else `root/<name>`.
pub fn output_dir(config: &RunConfig, root: &Path) -> PathBuf {
    config.output.clone().unwrap_or_else(|| root.join(&config.name))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDiff {
    pub path: String,
    pub a: Value,
    pub b: Value,
    /// `b / a` for numbers.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub kind: String,
    pub rtol: f64,
    pub atol: f64,
    pub diffs: Vec<FieldDiff>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        other => out.push((prefix.to_string(), other.clone())),
    }
}

/// Field-wise differences of the results and config of two manifests.
pub fn compare(a: &Manifest, b: &Manifest, rtol: f64, atol: f64) -> Result<DiffReport> {
    if a.kind != b.kind {
        return Err(Error::Config(vec![format!("cannot compare a {} run with a {} run", a.kind, b.kind)]));
    }
    let mut fa = Vec::new();
    let mut fb = Vec::new();
    for (m, out) in [(a, &mut fa), (b, &mut fb)] {
        flatten("results", &m.results, out);
        flatten("config", &serde_json::to_value(&m.config)?, out);
    }
    let mut diffs = Vec::new();
    let mut keys: Vec<&String> = fa.iter().map(|p| &p.0).chain(fb.iter().map(|p| &p.0)).collect();
    keys.sort();
    keys.dedup();
    let get = |v: &Vec<(String, Value)>, k: &str| v.iter().find(|p| p.0 == k).map(|p| p.1.clone()).unwrap_or(Value::Null);
    for k in keys {
        if k == "config.name" || k.starts_with("config.output") {
            continue;
        }
        let (x, y) = (get(&fa, k), get(&fb, k));
        let differs = match (x.as_f64(), y.as_f64()) {
            (Some(p), Some(q)) => (p - q).abs() > atol + rtol * p.abs().max(q.abs()),
            _ => x != y,
        };
        if differs {
            let ratio = x.as_f64().zip(y.as_f64()).map(|(p, q)| q / p);
            diffs.push(FieldDiff {
                path: k.clone(),
                a: x,
                b: y,
                ratio,
            });
        }
    }
    Ok(DiffReport {
        kind: a.kind.clone(),
        rtol,
        atol,
        diffs,
    })
}

/// Every `*.json` config in `dir`, sorted by file name.
pub fn discover_configs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}
