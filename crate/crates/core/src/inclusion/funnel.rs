use serde::{Deserialize, Serialize};

use super::envelope::{envelope_piecewise, BoundsEnvelope};
use super::flux::{critical_values, FluxModel};
use super::velocity::VelocitySet;
use crate::geometry::{center_distances, distance_to_complement, sym_diff_measure, Grid, GridSet};
use crate::{map_indices, Error, Point, Result};

/// Default number of state samples per velocity set.
pub const DEFAULT_NSAMP: usize = 64;

/// A right-hand side `F(t, x) = d(t, x) + W(t)` with `W` convex and
/// independent of `x`.
pub trait Inclusion: Sync {
    fn dim(&self) -> usize;
    fn drift(&self, t: f64, x: Point) -> Point;
    /// A convex set containing `W(t)` for every `t ∈ [t0, t1]`.
    fn shape(&self, t0: f64, t1: f64) -> Result<VelocitySet>;
    /// Upper bound of `|v|` over `v ∈ F(t, x)`, `x` in the grid box, `t ∈ [t0, t1]`.
    fn max_speed(&self, grid: &Grid, t0: f64, t1: f64) -> Result<f64>;

    fn velocity_set(&self, t: f64, x: Point) -> Result<VelocitySet> {
        Ok(self.shape(t, t)?.translate(self.drift(t, x)))
    }
}

/// `F(t, x) = co ∂_u f(t, x, [a(t), b(t)])`.
#[derive(Clone, Debug)]
pub struct FluxInclusion<'a> {
    flux: &'a FluxModel,
    env: &'a BoundsEnvelope,
    nsamp: usize,
}

impl<'a> FluxInclusion<'a> {
    pub fn new(flux: &'a FluxModel, env: &'a BoundsEnvelope) -> Self {
        Self { flux, env, nsamp: DEFAULT_NSAMP }
    }

    pub fn with_samples(mut self, nsamp: usize) -> Result<Self> {
        if nsamp < 2 {
            return Err(Error::InvalidArgument(format!("nsamp must be at least 2, got {nsamp}")));
        }
        self.nsamp = nsamp;
        Ok(self)
    }
}

fn state_hull(flux: &FluxModel, lo: f64, hi: f64, nsamp: usize) -> Result<VelocitySet> {
    if !(lo <= hi) {
        return Err(Error::InvertedBounds { lo, hi });
    }
    let mut pts: Vec<Point> = (0..nsamp)
        .map(|j| lo + (hi - lo) * j as f64 / (nsamp - 1) as f64)
        .chain(critical_values(lo, hi))
        .map(|u| flux.state_speed(u))
        .collect();
    pts.dedup();
    VelocitySet::hull(flux.dim, &pts)
}

impl Inclusion for FluxInclusion<'_> {
    fn dim(&self) -> usize {
        self.flux.dim
    }

    fn drift(&self, t: f64, x: Point) -> Point {
        self.flux.drift_at(t, x)
    }

    fn shape(&self, t0: f64, t1: f64) -> Result<VelocitySet> {
        let (lo, hi) = self.env.range(t0, t1);
        state_hull(self.flux, lo, hi, self.nsamp)
    }

    fn max_speed(&self, grid: &Grid, t0: f64, t1: f64) -> Result<f64> {
        let (lo, hi) = self.env.range(t0, t1);
        if !(lo <= hi) {
            return Err(Error::InvertedBounds { lo, hi });
        }
        Ok(self.flux.max_speed(grid, lo, hi))
    }
}

/// `co ∂_u f(t, x, u_j)` over `nsamp` uniform samples of `[a(t), b(t)]`.
pub fn velocity_set(
    flux: &FluxModel,
    t: f64,
    x: Point,
    env: &BoundsEnvelope,
    nsamp: usize,
) -> Result<VelocitySet> {
    if nsamp < 2 {
        return Err(Error::InvalidArgument(format!("nsamp must be at least 2, got {nsamp}")));
    }
    let (lo, hi) = (env.lower(t), env.upper(t));
    if !(lo <= hi) {
        return Err(Error::InvertedBounds { lo, hi });
    }
    let pts: Vec<Point> = (0..nsamp)
        .map(|j| flux.speed(t, x, lo + (hi - lo) * j as f64 / (nsamp - 1) as f64))
        .collect();
    VelocitySet::hull(flux.dim, &pts)
}

/// A fixed velocity set, independent of `(t, x)`.
#[derive(Clone, Debug)]
pub struct ConstantInclusion(pub VelocitySet);

impl Inclusion for ConstantInclusion {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn drift(&self, _t: f64, _x: Point) -> Point {
        [0.0, 0.0]
    }

    fn shape(&self, _t0: f64, _t1: f64) -> Result<VelocitySet> {
        Ok(self.0.clone())
    }

    fn max_speed(&self, _grid: &Grid, _t0: f64, _t1: f64) -> Result<f64> {
        Ok(self.0.max_norm())
    }
}

/// `F̂(t, y) = −F(τ + τ₀ − t, y)`.
struct Reversed<'a, I: ?Sized> {
    inner: &'a I,
    pivot: f64,
}

impl<I: Inclusion + ?Sized> Inclusion for Reversed<'_, I> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn drift(&self, t: f64, x: Point) -> Point {
        let d = self.inner.drift(self.pivot - t, x);
        [-d[0], -d[1]]
    }

    fn shape(&self, t0: f64, t1: f64) -> Result<VelocitySet> {
        Ok(self.inner.shape(self.pivot - t1, self.pivot - t0)?.negate())
    }

    fn max_speed(&self, grid: &Grid, t0: f64, t1: f64) -> Result<f64> {
        self.inner.max_speed(grid, self.pivot - t1, self.pivot - t0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// Time slices of a forward or backward integral funnel, ascending in time.
#[derive(Clone, Debug, PartialEq)]
pub struct Funnel {
    direction: Direction,
    times: Vec<f64>,
    slices: Vec<GridSet>,
}

impl Funnel {
    pub fn new(direction: Direction, times: Vec<f64>, slices: Vec<GridSet>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::InvalidArgument("funnel needs one slice per time".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("funnel times must increase".into()));
        }
        let grid = slices[0].grid();
        if slices.iter().any(|s| s.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { direction, times, slices })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slices(&self) -> &[GridSet] {
        &self.slices
    }

    pub fn grid(&self) -> &Grid {
        self.slices[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the stored time nearest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            0
        } else if k == self.times.len() || t - self.times[k - 1] <= self.times[k] - t {
            k - 1
        } else {
            k
        }
    }

    pub fn slice_at(&self, t: f64) -> &GridSet {
        &self.slices[self.nearest(t)]
    }

    pub fn first(&self) -> &GridSet {
        &self.slices[0]
    }

    pub fn last(&self) -> &GridSet {
        &self.slices[self.slices.len() - 1]
    }

    pub fn into_parts(self) -> (Direction, Vec<f64>, Vec<GridSet>) {
        (self.direction, self.times, self.slices)
    }
}

/// Level function that is ≤ 0 exactly on members: boundary members sit at 0,
/// non-members carry their distance to the set.
fn initial_level(k: &GridSet) -> Vec<f64> {
    let h = k.grid().spacing();
    let outside = center_distances(k.grid(), k.mask());
    let inside = distance_to_complement(k);
    k.mask()
        .iter()
        .zip(outside.iter().zip(&inside))
        .map(|(&m, (&o, &i))| if m { h - i } else { o })
        .collect()
}

/// Bilinear interpolation of cell-centred values; beyond the outer centres the
/// value grows at unit slope.
fn interpolate(grid: &Grid, phi: &[f64], p: Point) -> f64 {
    let h = grid.spacing();
    let [nx, ny] = grid.extents();
    let origin = grid.origin();
    let fx = (p[0] - origin[0]) / h - 0.5;
    let cx = fx.clamp(0.0, (nx - 1) as f64);
    let ix = (cx.floor() as usize).min(nx.saturating_sub(2));
    let sx = cx - ix as f64;
    if grid.dim() == 1 {
        let v = if nx == 1 { phi[0] } else { (1.0 - sx) * phi[ix] + sx * phi[ix + 1] };
        return v + (fx - cx).abs() * h;
    }
    let fy = (p[1] - origin[1]) / h - 0.5;
    let cy = fy.clamp(0.0, (ny - 1) as f64);
    let iy = (cy.floor() as usize).min(ny.saturating_sub(2));
    let sy = cy - iy as f64;
    let at = |x: usize, y: usize| phi[y * nx + x];
    let v = (1.0 - sy) * ((1.0 - sx) * at(ix, iy) + sx * at(ix + 1, iy))
        + sy * ((1.0 - sx) * at(ix, iy + 1) + sx * at(ix + 1, iy + 1));
    v + (fx - cx).hypot(fy - cy) * h
}

/// Cells within half a cell of the zero sublevel set. A set that has shrunk
/// below the resolution keeps the cells nearest to it.
fn level_mask(grid: &Grid, phi: &[f64]) -> Result<GridSet> {
    let h = grid.spacing();
    let lowest = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let limit = (0.5 * h).max(lowest + 1e-9 * h);
    GridSet::new(grid.clone(), phi.iter().map(|&v| v <= limit).collect())
}

/// Least anchor value over grid centres inside the departure region
/// `x − τW`. Together with the boundary samples this gives the minimum of the
/// interpolant over the region, which has no interior minima within a cell.
fn centres_min(grid: &Grid, phi: &[f64], shape: &VelocitySet, x: Point, tau: f64) -> f64 {
    let h = grid.spacing();
    let (lo, hi) = shape.bounds();
    let origin = grid.origin();
    let [nx, ny] = grid.extents();
    let range = |a: usize, n: usize| -> Option<(usize, usize)> {
        let first = ((x[a] - tau * hi[a] - origin[a]) / h - 0.5).ceil().max(0.0);
        let last = ((x[a] - tau * lo[a] - origin[a]) / h - 0.5).floor().min(n as f64 - 1.0);
        (first <= last).then_some((first as usize, last as usize))
    };
    let Some((x0, x1)) = range(0, nx) else { return f64::INFINITY };
    let (y0, y1) = if grid.dim() == 2 {
        match range(1, ny) {
            Some(r) => r,
            None => return f64::INFINITY,
        }
    } else {
        (0, 0)
    };
    let tol = 1e-9 * h / tau;
    let mut best = f64::INFINITY;
    for iy in y0..=y1 {
        for ix in x0..=x1 {
            let c = grid.index(ix, iy);
            if phi[c] >= best {
                continue;
            }
            let p = grid.center(c);
            if shape.contains([(x[0] - p[0]) / tau, (x[1] - p[1]) / tau], tol) {
                best = phi[c];
            }
        }
    }
    best
}

/// Search radius (cells) for the inward signed-distance extension.
const INNER_BAND: i64 = 3;

/// Extends the level function inside the set as a signed distance:
/// `φ(c) ← min(φ(c), max_b (φ(b) − |c − b|))` over nearby cells `b` with
/// `φ(b) > 0`. Without this, sets without interior keep a flat `φ = 0` whose
/// kink at the boundary costs a fraction of a cell at every interpolation.
/// The update is monotone: pointwise smaller input gives smaller output.
fn redistance(grid: &Grid, phi: Vec<f64>) -> Vec<f64> {
    let h = grid.spacing();
    let [nx, ny] = grid.extents();
    let r = INNER_BAND;
    let ry = if grid.dim() == 2 { r } else { 0 };
    let floor = -((r * r + ry * ry) as f64).sqrt() * h - h;
    let src = &phi;
    map_indices(grid.len(), |c| {
        let v = src[c];
        if v > 0.0 {
            return v;
        }
        let (ix, iy) = grid.coords(c);
        let mut best = floor;
        for dy in -ry..=ry {
            let y = iy as i64 + dy;
            if y < 0 || y >= ny as i64 {
                continue;
            }
            for dx in -r..=r {
                let x = ix as i64 + dx;
                if x < 0 || x >= nx as i64 {
                    continue;
                }
                let b = src[y as usize * nx + x as usize];
                if b > 0.0 {
                    best = best.max(b - ((dx * dx + dy * dy) as f64).sqrt() * h);
                }
            }
        }
        v.min(best)
    })
}

/// Longest window between re-anchorings of the level function.
const MAX_WINDOW: usize = 16;
/// Largest reach of the set-valued part over one window, in cells.
const WINDOW_REACH: f64 = 4.0;

/// Backward characteristic of the drift alone from `(t_end, y)` over `j`
/// midpoint steps of length `dt`.
fn drift_foot<I: Inclusion + ?Sized>(inc: &I, y: Point, t_end: f64, dt: f64, j: usize) -> Point {
    let mut x = y;
    for s in 0..j {
        let t = t_end - s as f64 * dt;
        let d1 = inc.drift(t, x);
        let d = inc.drift(t - 0.5 * dt, [x[0] - 0.5 * dt * d1[0], x[1] - 0.5 * dt * d1[1]]);
        x = [x[0] - dt * d[0], x[1] - dt * d[1]];
    }
    x
}

/// Forward propagation of `k` under `inc` over `[t0, t1]` in `steps` steps.
///
/// Each slice is a min-plus update of the level function at the last anchor:
/// `φ(y) = min_w φ_anchor(X(y) − τ w)`, where `X` follows the drift back to the
/// anchor time, `τ` is the elapsed time and `w` ranges over the boundary of
/// the set-valued part on the window. The anchor moves every few steps, so
/// interpolation error accumulates once per window rather than once per step.
fn propagate_forward<I: Inclusion + ?Sized>(
    inc: &I,
    k: &GridSet,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<(Vec<f64>, Vec<GridSet>)> {
    let grid = k.grid().clone();
    let h = grid.spacing();
    let dt = (t1 - t0) / steps as f64;
    let spread = inc.shape(t0, t1)?.diameter();
    let window = if spread > 0.0 {
        ((WINDOW_REACH * h / (dt * spread)).floor() as usize).clamp(1, MAX_WINDOW)
    } else {
        MAX_WINDOW
    };
    let time = |i: usize| if i == steps { t1 } else { t0 + i as f64 * dt };
    let mut anchor = initial_level(k);
    let mut anchor_step = 0;
    let mut times = vec![t0];
    let mut slices = vec![k.clone()];
    for step in 1..=steps {
        let j = step - anchor_step;
        let (ta, tb) = (time(anchor_step), time(step));
        let tau = tb - ta;
        let shape = inc.shape(ta, tb)?;
        let samples = shape.boundary_samples(h / (4.0 * tau));
        let base = &anchor;
        let phi = map_indices(grid.len(), |i| {
            let x = drift_foot(inc, grid.center(i), tb, tau / j as f64, j);
            let edge = samples
                .iter()
                .map(|w| interpolate(&grid, base, [x[0] - tau * w[0], x[1] - tau * w[1]]))
                .fold(f64::INFINITY, f64::min);
            if edge > -h {
                edge.min(centres_min(&grid, base, &shape, x, tau))
            } else {
                edge
            }
        });
        times.push(tb);
        slices.push(level_mask(&grid, &phi)?);
        if j == window {
            anchor = redistance(&grid, phi);
            anchor_step = step;
        }
    }
    Ok((times, slices))
}

/// Funnel of an arbitrary inclusion. `Backward` propagates the reversed
/// inclusion from `k` at `tau` and re-indexes the slices to `[tau0, tau]`.
pub fn propagate<I: Inclusion + ?Sized>(
    inc: &I,
    k: &GridSet,
    tau0: f64,
    tau: f64,
    dt: f64,
    direction: Direction,
) -> Result<Funnel> {
    if k.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(tau0 < tau) {
        return Err(Error::InvalidArgument(format!("need tau0 < tau, got {tau0} and {tau}")));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if inc.dim() != k.grid().dim() {
        return Err(Error::InvalidArgument("inclusion and set dimensions differ".into()));
    }
    let grid = k.grid();
    let h = grid.spacing();
    let reach = dt * inc.max_speed(grid, tau0, tau)?;
    if reach > h * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, reach, spacing: h });
    }
    let steps = (((tau - tau0) / dt) - 1e-9).ceil().max(1.0) as usize;
    match direction {
        Direction::Forward => {
            let (times, slices) = propagate_forward(inc, k, tau0, tau, steps)?;
            Funnel::new(direction, times, slices)
        }
        Direction::Backward => {
            let rev = Reversed { inner: inc, pivot: tau + tau0 };
            let (times, mut slices) = propagate_forward(&rev, k, tau0, tau, steps)?;
            slices.reverse();
            let mut times: Vec<f64> = times.into_iter().rev().map(|s| tau + tau0 - s).collect();
            times[0] = tau0;
            *times.last_mut().unwrap() = tau;
            Funnel::new(direction, times, slices)
        }
    }
}

/// Funnel of `F(t, x) = co ∂_u f(t, x, [a(t), b(t)])` with the default sampling.
pub fn propagate_funnel(
    flux: &FluxModel,
    k: &GridSet,
    env: &BoundsEnvelope,
    tau0: f64,
    tau: f64,
    dt: f64,
    direction: Direction,
) -> Result<Funnel> {
    propagate(&FluxInclusion::new(flux, env), k, tau0, tau, dt, direction)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub step: f64,
    /// Symmetric difference at the final time.
    pub final_sym_diff: f64,
    /// Largest symmetric difference over the stored times.
    pub max_sym_diff: f64,
}

/// Compares funnels of step envelopes against the funnel of `env`.
pub fn funnel_convergence(
    flux: &FluxModel,
    k: &GridSet,
    env: &BoundsEnvelope,
    tau0: f64,
    tau: f64,
    dt: f64,
    h_list: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    if h_list.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidArgument("step widths must decrease".into()));
    }
    let reference = propagate_funnel(flux, k, env, tau0, tau, dt, Direction::Forward)?;
    h_list
        .iter()
        .map(|&h| {
            let stepped = envelope_piecewise(env, h)?;
            let funnel = propagate_funnel(flux, k, &stepped, tau0, tau, dt, Direction::Forward)?;
            let mut max_sym_diff: f64 = 0.0;
            let mut final_sym_diff = 0.0;
            for (a, b) in funnel.slices().iter().zip(reference.slices()) {
                final_sym_diff = sym_diff_measure(a, b)?;
                max_sym_diff = max_sym_diff.max(final_sym_diff);
            }
            Ok(ConvergenceRow { step: h, final_sym_diff, max_sym_diff })
        })
        .collect()
}
