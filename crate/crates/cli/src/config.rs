//! Flat `key = value` run configuration with dotted section names.
//!
//! The schema is documented in the README; unknown keys are rejected so a
//! typo cannot silently fall back to a default.

use anyhow::{anyhow, bail, Context, Result};
use scalarfield_core::{build_grid, GridRef, ModelKind, NonlinearityModel, SplitScheme, SymmetryClass};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: BTreeMap<String, String>,
    pub class: SymmetryClass,
    pub model: NonlinearityModel,
    pub truncate: bool,
    pub r_inf: f64,
    pub h: f64,
    pub stages: usize,
    pub grad_tol: f64,
    pub poho_tol: f64,
    pub max_iters: usize,
    pub path_nodes: usize,
    pub seed: u64,
    pub k: usize,
    pub big_r: Option<f64>,
    pub out_dir: String,
}

const KNOWN_KEYS: &[&str] = &[
    "problem.n",
    "problem.m",
    "problem.class",
    "nonlinearity.kind",
    "nonlinearity.a",
    "nonlinearity.b",
    "nonlinearity.c",
    "nonlinearity.table",
    "nonlinearity.truncate",
    "grid.r_inf",
    "grid.h",
    "solver.stages",
    "solver.grad_tol",
    "solver.poho_tol",
    "solver.max_iters",
    "solver.path_nodes",
    "solver.seed",
    "task.k",
    "task.r",
    "output.dir",
];

pub fn parse_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            bail!("line {}: unknown key {key:?}", lineno + 1);
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn get_f64(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().with_context(|| format!("{key} = {v:?} is not a number")),
    }
}

fn get_usize(map: &BTreeMap<String, String>, key: &str, default: usize) -> Result<usize> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().with_context(|| format!("{key} = {v:?} is not an integer")),
    }
}

impl RunConfig {
    pub fn from_map(map: BTreeMap<String, String>, base_dir: &Path) -> Result<Self> {
        let n = get_usize(&map, "problem.n", 3)? as u32;
        let m = get_usize(&map, "problem.m", 2)? as u32;
        let class = match map.get("problem.class").map(|s| s.as_str()).unwrap_or("radial") {
            "radial" => SymmetryClass::Radial { n },
            "o1tau" => SymmetryClass::O1Tau { n, m },
            "o2tau" => SymmetryClass::O2Tau { n, m },
            "line" => SymmetryClass::Line,
            other => bail!("problem.class = {other:?} (expected radial|o1tau|o2tau|line)"),
        };
        let kind = map.get("nonlinearity.kind").map(|s| s.as_str()).unwrap_or("cubic");
        let a = get_f64(&map, "nonlinearity.a", 1.0)?;
        let b = get_f64(&map, "nonlinearity.b", 1.0)?;
        let c = get_f64(&map, "nonlinearity.c", 0.05)?;
        let model_kind = match kind {
            "cubic" => ModelKind::Cubic { a, b },
            "cubic-quintic" => ModelKind::CubicQuintic { a, b, c },
            "table" => {
                let rel = map
                    .get("nonlinearity.table")
                    .ok_or_else(|| anyhow!("nonlinearity.kind = table needs nonlinearity.table"))?;
                let path = base_dir.join(rel);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading table {}", path.display()))?;
                let mut ts = Vec::new();
                let mut fs = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
                        continue;
                    }
                    let (t, f) = line
                        .split_once(',')
                        .ok_or_else(|| anyhow!("table line {}: expected `t,f`", i + 1))?;
                    ts.push(t.trim().parse::<f64>()?);
                    fs.push(f.trim().parse::<f64>()?);
                }
                ModelKind::Table(
                    scalarfield_core::nonlinearity::LinearTable::new(ts, fs)
                        .map_err(|e| anyhow!("{e}"))?,
                )
            }
            other => bail!("nonlinearity.kind = {other:?}"),
        };
        let truncate = map
            .get("nonlinearity.truncate")
            .map(|v| v == "true" || v == "1")
            .unwrap_or(false);
        let r_inf = get_f64(&map, "grid.r_inf", 20.0)?;
        let h = get_f64(&map, "grid.h", 0.05)?;

        // cross-field constraints checked before any compute
        if let SymmetryClass::O2Tau { n, m } = class {
            if m < 2 || 2 * m > n {
                bail!("o2tau needs 2 <= M <= N/2 (got N={n}, M={m})");
            }
            if n - 2 * m == 1 {
                bail!("o2tau needs N - 2M != 1 (got N={n}, M={m})");
            }
        }
        if let SymmetryClass::O1Tau { n, m } = class {
            if m < 2 || 2 * m > n {
                bail!("o1tau needs 2 <= M <= N/2 (got N={n}, M={m})");
            }
            if n < 5 || n == 2 * m {
                bail!("o1tau solves need N >= 5 and N - 2M != 0 (got N={n}, M={m})");
            }
        }

        Ok(Self {
            class,
            model: NonlinearityModel::new(model_kind, n),
            truncate,
            r_inf,
            h,
            stages: get_usize(&map, "solver.stages", 8)?,
            grad_tol: get_f64(&map, "solver.grad_tol", 5e-3)?,
            poho_tol: get_f64(&map, "solver.poho_tol", 1e-2)?,
            max_iters: get_usize(&map, "solver.max_iters", 5000)?,
            path_nodes: get_usize(&map, "solver.path_nodes", 33)?,
            seed: get_usize(&map, "solver.seed", 42)? as u64,
            k: get_usize(&map, "task.k", 1)?,
            big_r: map.get("task.r").map(|v| v.parse()).transpose()?,
            out_dir: map.get("output.dir").cloned().unwrap_or_else(|| "out".into()),
            raw: map,
        })
    }

    /// The working model after the optional truncation reduction, plus the
    /// derived split scheme.
    pub fn scheme(&self) -> Result<(NonlinearityModel, SplitScheme, bool)> {
        let mut model = self.model.clone();
        let mut truncated = false;
        if self.truncate {
            let zeta = scalarfield_core::find_zeta(&model, 0.0, 4.0, 1e-3)
                .map_err(|e| anyhow!("{e}"))?;
            let (m, t) = scalarfield_core::truncate(&model, zeta, 10.0 * zeta.max(1.0));
            model = m;
            truncated = t;
        }
        let scheme = SplitScheme::derive(&model).map_err(|e| anyhow!("{e}"))?;
        Ok((model, scheme, truncated))
    }

    pub fn radial_grid(&self) -> Result<GridRef> {
        let n = self.class.ambient_dim();
        build_grid(SymmetryClass::Radial { n }, self.r_inf, self.h.min(0.05))
            .map_err(|e| anyhow!("{e}"))
    }
}
