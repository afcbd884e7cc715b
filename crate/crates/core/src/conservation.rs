//! First-order local Lax–Friedrichs finite volumes for `∂_t u + div f(t, x, u) = 0`.

use serde::{Deserialize, Serialize};

use crate::geometry::{same_grid, Grid, GridSet, Raster};
use crate::inclusion::{BoundsEnvelope, FluxModel};
use crate::{map_indices, Error, Point, Result};

/// Cell averages of `u` at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    time: f64,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, time: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        Ok(Self { grid, time, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self::new(grid, 0.0, values)
    }

    pub fn from_raster(raster: Raster, time: f64) -> Result<Self> {
        let grid = raster.grid().clone();
        Self::new(grid, time, raster.into_values())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_raster(&self) -> Raster {
        Raster::new(self.grid.clone(), self.values.clone()).expect("field values match grid")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    /// Courant number `Δt · max|∂_u f| / spacing`, in `(0, 0.5]`.
    pub cfl: f64,
    /// Number of stored intervals; snapshots at `T·j/snapshots`.
    pub snapshots: usize,
    /// A change larger than `overflow_tol · max(1, ‖u₀‖∞)` in the two outermost
    /// cell rows is reported as the support reaching the boundary.
    pub overflow_tol: f64,
    /// Fixed step instead of `cfl · spacing / max|∂_u f|`; still checked against `cfl`.
    pub dt: Option<f64>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self { cfl: 0.45, snapshots: 10, overflow_tol: 1e-9, dt: None }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::InvalidArgument(format!("cfl must lie in (0, 0.5], got {}", self.cfl)));
        }
        if self.snapshots == 0 {
            return Err(Error::InvalidArgument("snapshots must be at least 1".into()));
        }
        if !(self.overflow_tol >= 0.0) {
            return Err(Error::InvalidArgument("overflow_tol must be non-negative".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub fields: Vec<Field>,
    pub flux: String,
    pub cfl: f64,
    pub steps: usize,
    /// Largest Courant number actually used.
    pub max_courant: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.fields.iter().map(Field::time).collect()
    }

    pub fn last(&self) -> &Field {
        &self.fields[self.fields.len() - 1]
    }

    /// Stored field nearest to `t`.
    pub fn at(&self, t: f64) -> &Field {
        self.fields
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("trajectory is never empty")
    }
}

/// Local Lax–Friedrichs flux across an interface at `x` with normal `axis`.
fn llf(flux: &FluxModel, t: f64, x: Point, axis: usize, ul: f64, ur: f64) -> f64 {
    let fl = flux.flux(t, x, ul)[axis];
    let fr = flux.flux(t, x, ur)[axis];
    let lo = ul.min(ur);
    let hi = ul.max(ur);
    let alpha = crate::inclusion::critical_values(lo, hi)
        .into_iter()
        .map(|u| flux.speed(t, x, u)[axis].abs())
        .fold(0.0, f64::max);
    0.5 * (fl + fr) - 0.5 * alpha * (ur - ul)
}

/// Conservative update of one line of cells along `axis` (outflow ghosts).
/// `start` is the physical centre of the first cell.
fn sweep_line(flux: &FluxModel, t: f64, dt: f64, h: f64, axis: usize, start: Point, line: &[f64]) -> Vec<f64> {
    let n = line.len();
    let lambda = dt / h;
    let face = |k: usize| -> Point {
        // Interface between cells k-1 and k.
        let mut p = start;
        p[axis] += (k as f64 - 0.5) * h;
        p
    };
    let fluxes: Vec<f64> = (0..=n)
        .map(|k| {
            let ul = line[k.saturating_sub(1)];
            let ur = line[k.min(n - 1)];
            llf(flux, t, face(k), axis, ul, ur)
        })
        .collect();
    (0..n).map(|i| line[i] - lambda * (fluxes[i + 1] - fluxes[i])).collect()
}

fn sweep(flux: &FluxModel, grid: &Grid, t: f64, dt: f64, axis: usize, u: &[f64]) -> Vec<f64> {
    let h = grid.spacing();
    let [nx, ny] = grid.extents();
    if grid.dim() == 1 {
        return sweep_line(flux, t, dt, h, 0, grid.center(0), u);
    }
    if axis == 0 {
        let rows = map_indices(ny, |j| {
            sweep_line(flux, t, dt, h, 0, grid.center(grid.index(0, j)), &u[j * nx..(j + 1) * nx])
        });
        rows.concat()
    } else {
        let cols = map_indices(nx, |i| {
            let line: Vec<f64> = (0..ny).map(|j| u[grid.index(i, j)]).collect();
            sweep_line(flux, t, dt, h, 1, grid.center(grid.index(i, 0)), &line)
        });
        let mut out = vec![0.0; u.len()];
        for (i, col) in cols.into_iter().enumerate() {
            for (j, v) in col.into_iter().enumerate() {
                out[grid.index(i, j)] = v;
            }
        }
        out
    }
}

fn rim_cells(grid: &Grid) -> Vec<usize> {
    let [nx, ny] = grid.extents();
    let depth = 2;
    (0..grid.len())
        .filter(|&c| {
            let (ix, iy) = grid.coords(c);
            let near_x = ix < depth || ix + depth >= nx;
            let near_y = grid.dim() == 2 && (iy < depth || iy + depth >= ny);
            near_x || near_y
        })
        .collect()
}

/// Advances `u0` to `T` and stores `cfg.snapshots + 1` equally spaced fields.
pub fn solve(flux: &FluxModel, u0: &Field, t_end: f64, cfg: &SchemeConfig) -> Result<Trajectory> {
    cfg.validate()?;
    flux.validate()?;
    let grid = u0.grid.clone();
    if flux.dim != grid.dim() {
        return Err(Error::InvalidArgument("flux and grid dimensions differ".into()));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("final time must be non-negative, got {t_end}")));
    }
    let h = grid.spacing();
    let rim = rim_cells(&grid);
    let scale = 1f64.max(u0.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let overflow = cfg.overflow_tol * scale;
    let t0 = u0.time;
    let mut u = u0.values.clone();
    let mut t = t0;
    let mut fields = vec![Field { grid: grid.clone(), time: t0, values: u.clone() }];
    let mut steps = 0;
    let mut max_courant: f64 = 0.0;
    for j in 1..=cfg.snapshots {
        let target = t0 + t_end * j as f64 / cfg.snapshots as f64;
        while t < target {
            let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let smax = flux.max_speed(&grid, lo, hi);
            let mut dt = match cfg.dt {
                Some(dt) => dt.min(target - t),
                None if smax > 0.0 => cfg.cfl * h / smax,
                None => target - t,
            };
            if t + dt >= target - 1e-12 * t_end.max(1.0) {
                dt = target - t;
            }
            let courant = dt * smax / h;
            if courant > cfg.cfl * (1.0 + 1e-9) {
                return Err(Error::Cfl { dt, reach: dt * smax, spacing: h });
            }
            max_courant = max_courant.max(courant);
            u = if grid.dim() == 1 {
                sweep(flux, &grid, t, dt, 0, &u)
            } else {
                let half = sweep(flux, &grid, t, 0.5 * dt, 0, &u);
                let full = sweep(flux, &grid, t, dt, 1, &half);
                sweep(flux, &grid, t + 0.5 * dt, 0.5 * dt, 0, &full)
            };
            t = if dt == target - t { target } else { t + dt };
            steps += 1;
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("solution blew up at t = {t}")));
            }
            if rim.iter().any(|&c| (u[c] - u0.values[c]).abs() > overflow) {
                return Err(Error::SupportOverflow { time: t });
            }
        }
        fields.push(Field { grid: grid.clone(), time: target, values: u.clone() });
    }
    Ok(Trajectory { fields, flux: flux.name().to_string(), cfl: cfg.cfl, steps, max_courant })
}

/// `∫_K |u − v|` as a cell-volume-weighted sum over the mask.
pub fn l1_distance(u: &Field, v: &Field, k: &GridSet) -> Result<f64> {
    same_grid(&u.grid, &v.grid)?;
    same_grid(&u.grid, k.grid())?;
    let vol = u.grid.cell_volume();
    Ok(k.cells().map(|c| (u.values[c] - v.values[c]).abs()).sum::<f64>() * vol)
}

pub fn total_mass(u: &Field) -> f64 {
    u.values.iter().sum::<f64>() * u.grid.cell_volume()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    pub time: f64,
    pub min: f64,
    pub max: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub pass: bool,
    pub tol: f64,
    /// Largest amount by which a stored value leaves `[a(t), b(t)]` (≤ 0 when inside).
    pub worst_violation: f64,
    pub rows: Vec<BoundsRow>,
}

/// Compares stored extrema with `[a(t) − tol, b(t) + tol]`.
pub fn verify_bounds(traj: &Trajectory, env: &BoundsEnvelope, tol: f64) -> BoundsReport {
    let mut worst = f64::NEG_INFINITY;
    let rows: Vec<BoundsRow> = traj
        .fields
        .iter()
        .map(|f| {
            let row = BoundsRow {
                time: f.time,
                min: f.min(),
                max: f.max(),
                lower: env.lower(f.time),
                upper: env.upper(f.time),
            };
            worst = worst.max(row.lower - row.min).max(row.max - row.upper);
            row
        })
        .collect();
    BoundsReport { pass: worst <= tol, tol, worst_violation: worst, rows }
}
