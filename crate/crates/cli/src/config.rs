//! Run configuration: JSON file, flag overrides, presets, typed specs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use funnel_core::conservation::Field;
use funnel_core::geometry::{Grid, GridSet};
use funnel_core::inclusion::{Drift, FluxModel, Nonlinearity};
use funnel_core::{io, Point};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// Reads `path` (or starts from `{}`) and applies `key.path=value` overrides.
/// Override values are parsed as JSON and fall back to plain strings.
pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Value> {
    let mut value = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => Value::Object(Map::new()),
    };
    if !value.is_object() {
        bail!("config must be a JSON object");
    }
    for (key, raw) in overrides {
        let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
        set_path(&mut value, key, v)?;
    }
    Ok(value)
}

/// Parses `key=value` from `--set`.
pub fn parse_assignment(s: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    if k.is_empty() {
        return Err("empty key".into());
    }
    Ok((k.to_string(), v.to_string()))
}

pub fn set_path(root: &mut Value, dotted: &str, v: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = dotted.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| anyhow!("config key `{dotted}`: `{part}` is not inside an object"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), v);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("split yields at least one part")
}

/// Typed view of the config; errors name the offending key.
pub fn typed<T: DeserializeOwned>(value: Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            anyhow!("config: {}", e.inner())
        } else {
            anyhow!("config key `{path}`: {}", e.inner())
        }
    })
}

fn grid_dim(value: &Value) -> Option<usize> {
    value.pointer("/grid/dim").and_then(Value::as_u64).map(|d| d as usize)
}

/// Replaces preset names under `flux`, the data keys and `scenario` by the
/// objects they stand for.
pub fn expand_presets(value: &mut Value, data_keys: &[&str]) -> Result<()> {
    let dim = grid_dim(value);
    if let (Some(Value::String(name)), Some(dim)) = (value.get("flux"), dim) {
        let model = flux_preset(name, dim).map_err(|e| anyhow!("config key `flux`: {e}"))?;
        value["flux"] = serde_json::to_value(model)?;
    }
    for key in data_keys {
        if let Some(Value::String(name)) = value.get(*key) {
            let expanded = data_preset(name).map_err(|e| anyhow!("config key `{key}`: {e}"))?;
            value[*key] = expanded;
        }
    }
    if let Some(Value::String(path)) = value.get("scenario") {
        let text = fs::read_to_string(path).with_context(|| format!("config key `scenario`: reading {path}"))?;
        value["scenario"] =
            serde_json::from_str(&text).with_context(|| format!("config key `scenario`: parsing {path}"))?;
    }
    Ok(())
}

pub const FLUX_PRESETS: &[&str] = &["burgers", "linear", "sine_burgers", "rotation", "swirl"];

pub fn flux_preset(name: &str, dim: usize) -> std::result::Result<FluxModel, String> {
    let e1 = Nonlinearity::Quadratic { direction: [1.0, 0.0] };
    let model = match name {
        "burgers" => FluxModel::burgers(dim),
        "linear" => FluxModel::linear(dim, [1.0, 0.0]),
        "sine_burgers" => FluxModel::new(dim, Drift::Sine { amplitude: 0.3, wavenumber: 2.0 }, e1),
        "rotation" => FluxModel::new(dim, Drift::Rotation { omega: 1.0 }, Nonlinearity::Zero),
        "swirl" => FluxModel::new(
            dim,
            Drift::Rotation { omega: 1.0 },
            Nonlinearity::Quadratic { direction: [0.6, 0.2] },
        ),
        _ => return Err(format!("unknown flux preset `{name}`, expected one of {FLUX_PRESETS:?}")),
    };
    model.map_err(|e| e.to_string())
}

pub const DATA_PRESETS: &[&str] = &["box", "bump", "riemann", "zero"];

/// A string naming a `.fnlr` file or an existing path is read as a raster;
/// otherwise it names a preset.
pub fn data_preset(name: &str) -> std::result::Result<Value, String> {
    if name.ends_with(".fnlr") || Path::new(name).is_file() {
        return Ok(json!({ "kind": "raster", "path": name }));
    }
    match name {
        "box" => Ok(json!({ "kind": "box", "lo": [-1.0, -1.0], "hi": [1.0, 1.0], "value": 1.0 })),
        "bump" => Ok(json!({ "kind": "bump", "center": [0.0, 0.0], "radius": 1.0, "amplitude": 1.0 })),
        "riemann" => Ok(json!({ "kind": "riemann", "left": 1.0, "right": 0.0, "at": 0.0 })),
        "zero" => Ok(json!({ "kind": "zero" })),
        _ => Err(format!("`{name}` is neither a raster file nor one of {DATA_PRESETS:?}")),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        let grid = match self.dim {
            1 => Grid::line(self.lo, self.hi, self.cells),
            2 => Grid::square(self.lo, self.hi, self.cells),
            d => bail!("config key `grid.dim`: {d} is not 1 or 2"),
        };
        grid.map_err(|e| anyhow!("config key `grid`: {e}"))
    }
}

fn one() -> f64 {
    1.0
}

/// Point from a coordinate list; a 1D grid uses the first entry.
pub fn point(coords: &[f64], grid: &Grid, key: &str) -> Result<Point> {
    if coords.len() < grid.dim() {
        bail!("config key `{key}`: need {} coordinates, got {}", grid.dim(), coords.len());
    }
    Ok(if grid.dim() == 1 { [coords[0], 0.0] } else { [coords[0], coords[1]] })
}

fn in_box(p: Point, lo: Point, hi: Point, dim: usize) -> bool {
    (0..dim).all(|k| lo[k] <= p[k] && p[k] <= hi[k])
}

fn radius(p: Point, c: Point, dim: usize) -> f64 {
    if dim == 1 {
        (p[0] - c[0]).abs()
    } else {
        (p[0] - c[0]).hypot(p[1] - c[1])
    }
}

/// Initial data on the run grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Zero,
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default = "one")]
        value: f64,
    },
    /// `amplitude · (1 − (r/radius)²)²` inside the ball, zero outside.
    Bump {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `left` for `x₁ < at`, `right` otherwise.
    Riemann {
        left: f64,
        right: f64,
        #[serde(default)]
        at: f64,
    },
    /// `offset + amplitude · sin(wavenumber · x₁)`.
    Sine {
        amplitude: f64,
        wavenumber: f64,
        #[serde(default)]
        offset: f64,
    },
    Raster {
        path: PathBuf,
    },
}

impl DataSpec {
    pub fn build(&self, grid: &Grid, key: &str) -> Result<Field> {
        let dim = grid.dim();
        let field = match self {
            Self::Zero => Field::from_fn(grid.clone(), |_| 0.0),
            Self::Box { lo, hi, value } => {
                let (lo, hi) = (point(lo, grid, key)?, point(hi, grid, key)?);
                Field::from_fn(grid.clone(), |p| if in_box(p, lo, hi, dim) { *value } else { 0.0 })
            }
            Self::Bump { center, radius: r0, amplitude } => {
                if !(*r0 > 0.0) {
                    bail!("config key `{key}.radius`: must be positive");
                }
                let c = point(center, grid, key)?;
                Field::from_fn(grid.clone(), |p| {
                    let s = radius(p, c, dim) / r0;
                    amplitude * (1.0 - s * s).max(0.0).powi(2)
                })
            }
            Self::Gaussian { center, width, amplitude } => {
                if !(*width > 0.0) {
                    bail!("config key `{key}.width`: must be positive");
                }
                let c = point(center, grid, key)?;
                Field::from_fn(grid.clone(), |p| amplitude * (-(radius(p, c, dim) / width).powi(2)).exp())
            }
            Self::Riemann { left, right, at } => {
                Field::from_fn(grid.clone(), |p| if p[0] < *at { *left } else { *right })
            }
            Self::Sine { amplitude, wavenumber, offset } => {
                Field::from_fn(grid.clone(), |p| offset + amplitude * (wavenumber * p[0]).sin())
            }
            Self::Raster { path } => {
                let raster = io::read_raster(path).with_context(|| format!("config key `{key}.path`"))?;
                if raster.grid() != grid {
                    bail!("config key `{key}.path`: raster grid differs from the configured grid");
                }
                Field::from_raster(raster, 0.0)
            }
        };
        field.map_err(|e| anyhow!("config key `{key}`: {e}"))
    }
}

/// A closed set on the run grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Point { at: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Union { parts: Vec<SetSpec> },
    Raster { path: PathBuf },
}

impl SetSpec {
    pub fn build(&self, grid: &Grid, key: &str) -> Result<GridSet> {
        let dim = grid.dim();
        let set = match self {
            Self::Point { at } => GridSet::singleton(grid.clone(), point(at, grid, key)?)
                .map_err(|e| anyhow!("config key `{key}.at`: {e}"))?,
            Self::Ball { center, radius: r } => {
                let c = point(center, grid, key)?;
                GridSet::from_predicate(grid.clone(), |p| radius(p, c, dim) <= *r)
            }
            Self::Box { lo, hi } => {
                let (lo, hi) = (point(lo, grid, key)?, point(hi, grid, key)?);
                GridSet::from_predicate(grid.clone(), |p| in_box(p, lo, hi, dim))
            }
            Self::Union { parts } => {
                let mut acc = GridSet::empty(grid.clone());
                for (i, part) in parts.iter().enumerate() {
                    acc = acc.union(&part.build(grid, &format!("{key}.parts[{i}]"))?)?;
                }
                acc
            }
            Self::Raster { path } => {
                let set = io::read_mask(path).with_context(|| format!("config key `{key}.path`"))?;
                if set.grid() != grid {
                    bail!("config key `{key}.path`: raster grid differs from the configured grid");
                }
                set
            }
        };
        if set.is_empty() {
            bail!("config key `{key}`: set contains no cell");
        }
        Ok(set)
    }
}
