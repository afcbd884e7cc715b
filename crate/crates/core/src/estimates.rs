//! Contraction, domain-of-dependence, perturbation and support estimates
//! built from solver runs and funnels.

use serde::{Deserialize, Serialize};

use crate::conservation::{l1_distance, solve, Field, SchemeConfig};
use crate::geometry::{directed_hausdorff, dist, is_tubular, support_of_field, Grid, GridSet};
use crate::inclusion::{
    envelope_exponential, propagate, BoundsEnvelope, Direction, FluxInclusion, FluxModel, Funnel, Inclusion,
    DEFAULT_NSAMP,
};
use crate::{Error, Point, Result};

/// Funnel discretisation knobs shared by the estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunnelConfig {
    /// Funnel step; by default `courant · spacing / cmax`.
    pub dt: Option<f64>,
    pub courant: f64,
    pub nsamp: usize,
}

impl Default for FunnelConfig {
    fn default() -> Self {
        Self { dt: None, courant: 0.9, nsamp: DEFAULT_NSAMP }
    }
}

impl FunnelConfig {
    /// Step for `inc` on `grid` over `[t0, t1]`, shortened so that `t1 − t0`
    /// is a multiple of `(t1 − t0)/align`.
    pub fn step<I: Inclusion + ?Sized>(&self, inc: &I, grid: &Grid, t0: f64, t1: f64, align: usize) -> Result<f64> {
        let span = t1 - t0;
        let dt = match self.dt {
            Some(dt) => dt,
            None => {
                let c = inc.max_speed(grid, t0, t1)?;
                if c > 0.0 {
                    self.courant * grid.spacing() / c
                } else {
                    span
                }
            }
        };
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("funnel step must be positive, got {dt}")));
        }
        let align = align.max(1);
        let per = ((span / align as f64) / dt - 1e-9).ceil().max(1.0);
        Ok(span / (align as f64 * per))
    }
}

/// `∫_K |u − ū|(τ)` against `∫_{Ω⁻_{τ₀}(K)} |u − ū|(τ₀)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub spacing: f64,
    pub funnel_dt: f64,
    pub funnel_cells: usize,
    pub envelope: BoundsEnvelope,
}

/// Envelope of Eq.-type exponential bounds covering every field in `data`.
pub fn data_envelope(flux: &FluxModel, data: &[&Field]) -> Result<BoundsEnvelope> {
    let grid = data
        .first()
        .ok_or_else(|| Error::InvalidArgument("no data".into()))?
        .grid();
    let a0 = data.iter().map(|f| f.min()).fold(f64::INFINITY, f64::min);
    let b0 = data.iter().map(|f| f.max()).fold(f64::NEG_INFINITY, f64::max);
    envelope_exponential(a0, b0, flux.lipschitz(grid), grid.dim())
}

fn advance(flux: &FluxModel, u0: &Field, t: f64, scheme: &SchemeConfig) -> Result<Field> {
    if t <= u0.time() {
        return Ok(u0.clone());
    }
    let cfg = SchemeConfig { snapshots: 1, ..scheme.clone() };
    Ok(solve(flux, u0, t - u0.time(), &cfg)?.last().clone())
}

/// Pins the scheme step so that runs from different data over `[0, t_end]`
/// share one discretisation. The step honours the CFL number for every value
/// inside `env`.
fn shared_scheme(flux: &FluxModel, grid: &Grid, env: &BoundsEnvelope, t_end: f64, scheme: &SchemeConfig) -> SchemeConfig {
    if scheme.dt.is_some() {
        return scheme.clone();
    }
    let (lo, hi) = env.range(0.0, t_end);
    let smax = flux.max_speed(grid, lo, hi);
    let dt = if smax > 0.0 { Some(scheme.cfl * grid.spacing() / smax) } else { None };
    SchemeConfig { dt, ..scheme.clone() }
}

/// Solves from `u0` and `ubar0` and compares both sides of the L¹ contraction
/// inequality on the backward funnel of `k`.
#[allow(clippy::too_many_arguments)]
pub fn contraction_check(
    flux: &FluxModel,
    u0: &Field,
    ubar0: &Field,
    k: &GridSet,
    tau0: f64,
    tau: f64,
    scheme: &SchemeConfig,
    funnel: &FunnelConfig,
) -> Result<ContractionReport> {
    if !(0.0 <= tau0 && tau0 <= tau) {
        return Err(Error::InvalidArgument(format!("need 0 ≤ tau0 ≤ tau, got {tau0}, {tau}")));
    }
    let grid = u0.grid();
    if ubar0.grid() != grid || k.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let h = grid.spacing();
    if k.is_empty() {
        return Err(Error::EmptySet);
    }
    if !is_tubular(k, 3.0 * h, 2.0 * h)? {
        return Err(Error::NotTubular { radius: 3.0 * h });
    }
    let env = data_envelope(flux, &[u0, ubar0])?;
    let scheme = &shared_scheme(flux, grid, &env, tau, scheme);
    let u_a = advance(flux, u0, tau0, scheme)?;
    let ub_a = advance(flux, ubar0, tau0, scheme)?;
    let u_b = advance(flux, &u_a, tau, scheme)?;
    let ub_b = advance(flux, &ub_a, tau, scheme)?;
    let inc = FluxInclusion::new(flux, &env).with_samples(funnel.nsamp)?;
    let (omega, dt) = if tau > tau0 {
        let dt = funnel.step(&inc, grid, tau0, tau, 1)?;
        (propagate(&inc, k, tau0, tau, dt, Direction::Backward)?.first().clone(), dt)
    } else {
        (k.clone(), 0.0)
    };
    let lhs = l1_distance(&u_b, &ub_b, k)?;
    let rhs = l1_distance(&u_a, &ub_a, &omega)?;
    Ok(ContractionReport {
        lhs,
        rhs,
        slack: rhs - lhs,
        spacing: h,
        funnel_dt: dt,
        funnel_cells: omega.count(),
        envelope: env,
    })
}

/// Outer estimate of the domain of dependence of `u(t, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DodEstimate {
    pub point: Point,
    pub time: f64,
    pub set: GridSet,
    pub envelope: BoundsEnvelope,
    /// Speed bound used for the ball comparison.
    pub cmax: f64,
}

/// Backward funnel of `{x}` from `t` to `0` under the envelope started at `[a0, b0]`.
#[allow(clippy::too_many_arguments)]
pub fn domain_of_dependence(
    flux: &FluxModel,
    grid: &Grid,
    a0: f64,
    b0: f64,
    x: Point,
    t: f64,
    funnel: &FunnelConfig,
) -> Result<DodEstimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    let env = envelope_exponential(a0, b0, flux.lipschitz(grid), grid.dim())?;
    let k = GridSet::singleton(grid.clone(), x)?;
    let inc = FluxInclusion::new(flux, &env).with_samples(funnel.nsamp)?;
    let dt = funnel.step(&inc, grid, 0.0, t, 1)?;
    let f = propagate(&inc, &k, 0.0, t, dt, Direction::Backward)?;
    let cmax = inc.max_speed(grid, 0.0, t)?;
    let point = grid.center(k.cells().next().expect("singleton"));
    Ok(DodEstimate { point, time: t, set: f.first().clone(), envelope: env, cmax })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationReport {
    /// Probe average of `|u(t) − v(t)|` over `B(x, r_probe)`.
    pub difference: f64,
    /// Distance between the support of `w` and the estimate.
    pub gap: f64,
    pub eps: f64,
    pub r_probe: f64,
    pub estimate_cells: usize,
}

/// Minimum gap, in cells, between the perturbation and the estimate.
pub const PERTURBATION_MARGIN_CELLS: f64 = 10.0;

/// Compares solutions from `u0` and `u0 + εw` near `(t, x)`.
#[allow(clippy::too_many_arguments)]
pub fn perturbation_test(
    flux: &FluxModel,
    u0: &Field,
    w: &Field,
    x: Point,
    t: f64,
    eps: f64,
    r_probe: f64,
    scheme: &SchemeConfig,
    funnel: &FunnelConfig,
) -> Result<PerturbationReport> {
    let grid = u0.grid();
    if w.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let wmax = w.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if wmax != 0.0 && (wmax - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("perturbation must have sup norm 1, got {wmax}")));
    }
    if !(r_probe > 0.0 && eps >= 0.0) {
        return Err(Error::InvalidArgument("need r_probe > 0 and eps ≥ 0".into()));
    }
    let v0 = Field::new(
        grid.clone(),
        u0.time(),
        u0.values().iter().zip(w.values()).map(|(u, w)| u + eps * w).collect(),
    )?;
    let a0 = u0.min().min(v0.min());
    let b0 = u0.max().max(v0.max());
    let est = domain_of_dependence(flux, grid, a0, b0, x, t, funnel)?;
    let spt = support_of_field(&w.to_raster(), 0.0)?;
    let gap = if spt.is_empty() { f64::INFINITY } else { directed_hausdorff_min(&spt, &est.set) };
    if gap < PERTURBATION_MARGIN_CELLS * grid.spacing() {
        return Err(Error::Precondition(format!(
            "perturbation support lies {gap:.4} from the estimate, need at least {} cells",
            PERTURBATION_MARGIN_CELLS
        )));
    }
    let probe = GridSet::ball(grid.clone(), x, r_probe);
    if probe.is_empty() {
        return Err(Error::InvalidArgument("probe ball contains no cell".into()));
    }
    let difference = if wmax == 0.0 || eps == 0.0 {
        0.0
    } else {
        let scheme = &shared_scheme(flux, grid, &est.envelope, t, scheme);
        let u = advance(flux, u0, t, scheme)?;
        let v = advance(flux, &v0, t, scheme)?;
        l1_distance(&u, &v, &probe)? / crate::geometry::measure(&probe)
    };
    Ok(PerturbationReport { difference, gap, eps, r_probe, estimate_cells: est.set.count() })
}

/// Smallest centre distance between two nonempty sets.
fn directed_hausdorff_min(a: &GridSet, b: &GridSet) -> f64 {
    let field = crate::geometry::distance_field(b).expect("nonempty");
    a.cells().map(|c| field.values()[c]).fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportRow {
    pub time: f64,
    pub support_cells: usize,
    pub slice_cells: usize,
    /// Largest distance from a support cell to the funnel slice.
    pub protrusion: f64,
}

#[derive(Clone, Debug)]
pub struct SupportReport {
    pub funnel: Funnel,
    pub rows: Vec<SupportRow>,
    pub worst_protrusion: f64,
    /// Allowed protrusion (two cells).
    pub allowance: f64,
    pub support_tol: f64,
    pub pass: bool,
}

/// Forward funnel from the support of `u0` and the per-snapshot protrusion of
/// the numerical support beyond it.
pub fn support_envelope(
    flux: &FluxModel,
    u0: &Field,
    t_end: f64,
    support_tol: f64,
    scheme: &SchemeConfig,
    funnel: &FunnelConfig,
) -> Result<SupportReport> {
    let grid = u0.grid();
    let h = grid.spacing();
    let k = support_of_field(&u0.to_raster(), support_tol)?;
    let traj = solve(flux, u0, t_end, scheme)?;
    let allowance = 2.0 * h;
    if k.is_empty() {
        let f = Funnel::new(Direction::Forward, vec![0.0], vec![k])?;
        let rows = traj
            .fields
            .iter()
            .map(|f| SupportRow { time: f.time(), support_cells: 0, slice_cells: 0, protrusion: 0.0 })
            .collect();
        return Ok(SupportReport { funnel: f, rows, worst_protrusion: 0.0, allowance, support_tol, pass: true });
    }
    let env = data_envelope(flux, &[u0])?;
    let inc = FluxInclusion::new(flux, &env).with_samples(funnel.nsamp)?;
    let t0 = u0.time();
    let dt = funnel.step(&inc, grid, t0, t0 + t_end, scheme.snapshots)?;
    let f = propagate(&inc, &k, t0, t0 + t_end, dt, Direction::Forward)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for field in &traj.fields {
        let spt = support_of_field(&field.to_raster(), support_tol)?;
        let slice = f.slice_at(field.time());
        let protrusion = if spt.is_empty() { 0.0 } else { directed_hausdorff(&spt, slice)? };
        worst = worst.max(protrusion);
        rows.push(SupportRow {
            time: field.time(),
            support_cells: spt.count(),
            slice_cells: slice.count(),
            protrusion,
        });
    }
    Ok(SupportReport {
        funnel: f,
        rows,
        worst_protrusion: worst,
        allowance,
        support_tol,
        pass: worst <= allowance * (1.0 + 1e-9),
    })
}

/// `B(x, r)` plus one cell, the crude speed-bound estimate.
pub fn kruzkov_ball(grid: &Grid, x: Point, r: f64) -> GridSet {
    let h = grid.spacing();
    GridSet::from_predicate(grid.clone(), |p| dist(p, x) <= r + h)
}
