//! One function per subcommand: typed config in, report pieces out.

use std::f64::consts::PI;

use anyhow::{anyhow, bail, Context, Result};
use funnel_core::confinement::{
    check_condition_with, pde_cross_check, simulate_confinement, sweep_omega, ConfinementScenario,
    DEFAULT_RSTAR_SAMPLES,
};
use funnel_core::conservation::{solve, total_mass, verify_bounds, Field, SchemeConfig};
use funnel_core::estimates::{
    contraction_check, data_envelope, domain_of_dependence, perturbation_test, support_envelope, FunnelConfig,
};
use funnel_core::geometry::{
    dist, hausdorff_distance, is_tubular, measure, minkowski_content, sym_diff_bound, sym_diff_measure, Grid,
    GridSet,
};
use funnel_core::inclusion::{
    propagate, proximal_residual, BoundsEnvelope, Direction, FluxInclusion, FluxModel,
};
use funnel_core::io;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{point, typed, DataSpec, GridSpec, SetSpec};
use crate::output::{Sink, Verdict};

/// What a subcommand hands back for the report.
pub struct Outcome {
    pub inputs: Value,
    pub verdict: Verdict,
    pub results: Value,
    pub warnings: Vec<String>,
}

fn outcome<C: Serialize>(cfg: &C, verdict: Verdict, results: Value) -> Result<Outcome> {
    Ok(Outcome { inputs: serde_json::to_value(cfg)?, verdict, results, warnings: Vec::new() })
}

fn checked_flux(flux: &FluxModel, grid: &Grid) -> Result<()> {
    flux.validate().map_err(|e| anyhow!("config key `flux`: {e}"))?;
    if flux.dim != grid.dim() {
        bail!("config key `flux.dim`: {} does not match grid dimension {}", flux.dim, grid.dim());
    }
    Ok(())
}

fn checked_scheme(scheme: &SchemeConfig) -> Result<()> {
    scheme.validate().map_err(|e| anyhow!("config key `scheme`: {e}"))
}

fn default_bounds_tol() -> f64 {
    1e-8
}

fn default_support_tol() -> f64 {
    1e-12
}

fn default_tol_cells() -> f64 {
    2.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    grid: GridSpec,
    flux: FluxModel,
    u0: DataSpec,
    #[serde(rename = "T")]
    t_end: f64,
    #[serde(default)]
    scheme: SchemeConfig,
    #[serde(default = "default_bounds_tol")]
    bounds_tol: f64,
}

#[derive(Serialize)]
struct SolveRow {
    time: f64,
    min: f64,
    max: f64,
    lower: f64,
    upper: f64,
    mass: f64,
}

pub fn solve_cmd(value: Value, sink: &mut Sink) -> Result<Outcome> {
    let cfg: SolveConfig = typed(value)?;
    let grid = cfg.grid.build()?;
    checked_flux(&cfg.flux, &grid)?;
    checked_scheme(&cfg.scheme)?;
    let u0 = cfg.u0.build(&grid, "u0")?;
    let traj = solve(&cfg.flux, &u0, cfg.t_end, &cfg.scheme)?;
    let env = data_envelope(&cfg.flux, &[&u0])?;
    let bounds = verify_bounds(&traj, &env, cfg.bounds_tol);
    let rows: Vec<SolveRow> = traj
        .fields
        .iter()
        .zip(&bounds.rows)
        .map(|(f, b)| SolveRow { time: b.time, min: b.min, max: b.max, lower: b.lower, upper: b.upper, mass: total_mass(f) })
        .collect();
    sink.series(&rows)?;
    io::write_trajectory(sink.raster_path("trajectory")?, &traj)?;
    let verdict = Verdict::at_most(
        "a(t) ≤ u ≤ b(t) at every stored time",
        bounds.worst_violation,
        0.0,
        cfg.bounds_tol,
        "bounds_tol",
    );
    let results = json!({
        "steps": traj.steps,
        "max_courant": traj.max_courant,
        "mass_initial": total_mass(&u0),
        "mass_final": total_mass(traj.last()),
        "worst_violation": bounds.worst_violation,
        "envelope": env,
    });
    outcome(&cfg, verdict, results)
}

fn forward() -> Direction {
    Direction::Forward
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunnelRunConfig {
    grid: GridSpec,
    flux: FluxModel,
    envelope: BoundsEnvelope,
    #[serde(rename = "K")]
    k: SetSpec,
    #[serde(default)]
    tau0: f64,
    tau: f64,
    #[serde(default = "forward")]
    direction: Direction,
    #[serde(default)]
    funnel: FunnelConfig,
    /// Checks the median Hamiltonian residual against this value when set.
    #[serde(default)]
    residual_tol: Option<f64>,
}

#[derive(Serialize)]
struct SliceRow {
    time: f64,
    cells: usize,
    measure: f64,
}

pub fn funnel_cmd(value: Value, sink: &mut Sink) -> Result<Outcome> {
    let cfg: FunnelRunConfig = typed(value)?;
    let grid = cfg.grid.build()?;
    checked_flux(&cfg.flux, &grid)?;
    let k = cfg.k.build(&grid, "K")?;
    let inc = FluxInclusion::new(&cfg.flux, &cfg.envelope)
        .with_samples(cfg.funnel.nsamp)
        .map_err(|e| anyhow!("config key `funnel.nsamp`: {e}"))?;
    let dt = cfg.funnel.step(&inc, &grid, cfg.tau0, cfg.tau, 1)?;
    let f = propagate(&inc, &k, cfg.tau0, cfg.tau, dt, cfg.direction)?;
    let rows: Vec<SliceRow> = f
        .times()
        .iter()
        .zip(f.slices())
        .map(|(&time, s)| SliceRow { time, cells: s.count(), measure: measure(s) })
        .collect();
    sink.series(&rows)?;
    io::write_funnel(sink.raster_path("funnel")?, &f)?;
    let (residual, verdict) = match cfg.residual_tol {
        Some(tol) => {
            let stats = proximal_residual(&f, &inc)?;
            let v = Verdict::at_most("median |θ + H| = 0 on the lateral boundary", stats.median, 0.0, tol, "residual_tol");
            (Some(stats), v)
        }
        None => (None, Verdict::none()),
    };
    let last = if cfg.direction == Direction::Forward { f.last() } else { f.first() };
    let results = json!({
        "dt": dt,
        "slices": f.len(),
        "end_cells": last.count(),
        "end_measure": measure(last),
        "end_diameter": last.diameter(),
        "residual": residual,
    });
    outcome(&cfg, verdict, results)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DodConfig {
    grid: GridSpec,
    flux: FluxModel,
    /// Initial data whose range gives `[a0, b0]`; ignored when `bounds` is set.
    #[serde(default)]
    u0: Option<DataSpec>,
    #[serde(default)]
    bounds: Option<[f64; 2]>,
    x: Vec<f64>,
    t: f64,
    #[serde(default)]
    funnel: FunnelConfig,
}

#[derive(Serialize)]
struct DodRow {
    time: f64,
    cells: usize,
    measure: f64,
    reach: f64,
    cmax: f64,
}

pub fn dod_cmd(value: Value, sink: &mut Sink) -> Result<Outcome> {
    let cfg: DodConfig = typed(value)?;
    let grid = cfg.grid.build()?;
    checked_flux(&cfg.flux, &grid)?;
    let (a0, b0) = match (&cfg.bounds, &cfg.u0) {
        (Some([a, b]), _) => (*a, *b),
        (None, Some(spec)) => {
            let u0 = spec.build(&grid, "u0")?;
            (u0.min(), u0.max())
        }
        (None, None) => bail!("config: need `bounds` or `u0` to bound the solution"),
    };
    let x = point(&cfg.x, &grid, "x")?;
    let est = domain_of_dependence(&cfg.flux, &grid, a0, b0, x, cfg.t, &cfg.funnel)?;
    let reach = est.set.cells().map(|c| dist(grid.center(c), est.point)).fold(0.0, f64::max);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in est.set.cells() {
        let p = grid.center(c);
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    io::write_mask(sink.raster_path("estimate.fnlr")?, &est.set)?;
    sink.series(&[DodRow { time: 0.0, cells: est.set.count(), measure: measure(&est.set), reach, cmax: est.cmax }])?;
    let h = grid.spacing();
    let verdict = Verdict::at_most("estimate ⊆ B(x, cmax·t)", reach, est.cmax * cfg.t, h, "one cell");
    let dim = grid.dim();
    let results = json!({
        "point": &est.point[..dim],
        "time": est.time,
        "cells": est.set.count(),
        "measure": measure(&est.set),
        "lower_corner": &lo[..dim],
        "upper_corner": &hi[..dim],
        "reach": reach,
        "cmax": est.cmax,
        "envelope": est.envelope,
    });
    outcome(&cfg, verdict, results)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSuite {
    pairs: usize,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractConfig {
    grid: GridSpec,
    flux: FluxModel,
    #[serde(default)]
    u0: Option<DataSpec>,
    #[serde(default)]
    ubar0: Option<DataSpec>,
    #[serde(rename = "K", default)]
    k: Option<SetSpec>,
    #[serde(default)]
    tau0: f64,
    tau: f64,
    #[serde(default)]
    scheme: SchemeConfig,
    #[serde(default)]
    funnel: FunnelConfig,
    /// Random pairs and sets instead of `u0`, `ubar0`, `K`.
    #[serde(default)]
    random: Option<RandomSuite>,
    #[serde(default = "default_tol_cells")]
    tol_cells: f64,
}

/// Sum of three Gaussians placed in the middle 30% of the box.
fn random_data(rng: &mut ChaCha8Rng, grid: &Grid) -> Result<Field> {
    let (lo, hi) = (grid.origin()[0], grid.upper()[0]);
    let len = hi - lo;
    let mid = 0.5 * (lo + hi);
    let dim = grid.dim();
    let bumps: Vec<([f64; 2], f64, f64)> = (0..3)
        .map(|_| {
            let mut c = [0.0; 2];
            for v in c.iter_mut().take(dim) {
                *v = mid + rng.gen_range(-0.15..0.15) * len;
            }
            (c, rng.gen_range(0.015..0.05) * len, rng.gen_range(-1.0..1.0))
        })
        .collect();
    Ok(Field::from_fn(grid.clone(), |p| {
        bumps.iter().map(|&(c, w, a)| a * (-(dist(p, c) / w).powi(2)).exp()).sum()
    })?)
}

fn random_set(rng: &mut ChaCha8Rng, grid: &Grid) -> GridSet {
    let (lo, hi) = (grid.origin()[0], grid.upper()[0]);
    let len = hi - lo;
    let mid = 0.5 * (lo + hi);
    let mut c = [0.0; 2];
    for v in c.iter_mut().take(grid.dim()) {
        *v = mid + rng.gen_range(-0.1..0.1) * len;
    }
    let r = rng.gen_range(0.02..0.06) * len;
    GridSet::from_predicate(grid.clone(), |p| dist(p, c) <= r)
}

#[derive(Serialize)]
struct ContractRow {
    case: usize,
    lhs: f64,
    rhs: f64,
    slack: f64,
    funnel_cells: usize,
}

pub fn contract_cmd(value: Value, sink: &mut Sink) -> Result<Outcome> {
    let cfg: ContractConfig = typed(value)?;
    let grid = cfg.grid.build()?;
    checked_flux(&cfg.flux, &grid)?;
    checked_scheme(&cfg.scheme)?;
    let cases: Vec<(Field, Field, GridSet)> = match &cfg.random {
        Some(suite) => {
            let mut rng = ChaCha8Rng::seed_from_u64(suite.seed);
            (0..suite.pairs)
                .map(|_| Ok((random_data(&mut rng, &grid)?, random_data(&mut rng, &grid)?, random_set(&mut rng, &grid))))
                .collect::<Result<_>>()?
        }
        None => {
            let need = |key: &str| anyhow!("config key `{key}`: required unless `random` is set");
            let u0 = cfg.u0.as_ref().ok_or_else(|| need("u0"))?.build(&grid, "u0")?;
            let ub0 = cfg.ubar0.as_ref().ok_or_else(|| need("ubar0"))?.build(&grid, "ubar0")?;
            let k = cfg.k.as_ref().ok_or_else(|| need("K"))?.build(&grid, "K")?;
            vec![(u0, ub0, k)]
        }
    };
    if cases.is_empty() {
        bail!("config key `random.pairs`: must be at least 1");
    }
    let mut reports = Vec::with_capacity(cases.len());
    let mut rows = Vec::with_capacity(cases.len());
    for (case, (u0, ub0, k)) in cases.iter().enumerate() {
        let r = contraction_check(&cfg.flux, u0, ub0, k, cfg.tau0, cfg.tau, &cfg.scheme, &cfg.funnel)
            .with_context(|| format!("contraction case {case}"))?;
        io::write_mask(sink.raster_path(&format!("K_{case:03}.fnlr"))?, k)?;
        rows.push(ContractRow { case, lhs: r.lhs, rhs: r.rhs, slack: r.slack, funnel_cells: r.funnel_cells });
        reports.push(r);
    }
    sink.series(&rows)?;
    let worst = reports.iter().min_by(|a, b| a.slack.total_cmp(&b.slack)).expect("nonempty");
    let h = grid.spacing();
    let verdict = Verdict::at_most(
        "∫_K |u − ū|(τ) ≤ ∫_{Ω⁻(K)} |u − ū|(τ₀) for every case",
        worst.lhs - worst.rhs,
        0.0,
        cfg.tol_cells * h,
        "tol_cells · spacing",
    );
    let results = json!({
        "lhs": worst.lhs,
        "rhs": worst.rhs,
        "slack": worst.slack,
        "spacing": h,
        "strictly_positive": reports.iter().filter(|r| r.slack > 0.0).count(),
        "cases": reports,
    });
    outcome(&cfg, verdict, results)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportConfig {
    grid: GridSpec,
    flux: FluxModel,
    u0: DataSpec,
    #[serde(rename = "T")]
    t_end: f64,
    #[serde(default = "default_support_tol")]
    support_tol: f64,
    #[serde(default)]
    scheme: SchemeConfig,
    #[serde(default)]
    funnel: FunnelConfig,
}

pub fn support_cmd(value: Value, sink: &mut Sink) -> Result<Outcome> {
    let cfg: SupportConfig = typed(value)?;
    let grid = cfg.grid.build()?;
    checked_flux(&cfg.flux, &grid)?;
    checked_scheme(&cfg.scheme)?;
    let u0 = cfg.u0.build(&grid, "u0")?;
    let r = support_envelope(&cfg.flux, &u0, cfg.t_end, cfg.support_tol, &cfg.scheme, &cfg.funnel)?;
    sink.series(&r.rows)?;
    io::write_funnel(sink.raster_path("funnel")?, &r.funnel)?;
    let verdict = Verdict::at_most(
        "spt u(t) ⊆ forward funnel slice at every stored time",
        r.worst_protrusion,
        0.0,
        r.allowance,
        "2 · spacing",
    );
    let results = json!({
        "worst_protrusion": r.worst_protrusion,
        "worst_protrusion_cells": r.worst_protrusion / grid.spacing(),
        "allowance": r.allowance,
        "support_tol": r.support_tol,
        "snapshots": r.rows.len(),
    });
    outcome(&cfg, verdict, results)
}

fn default_eps() -> f64 {
    0.1
}

fn default_probe() -> f64 {
    0.05
}

fn default_perturb_tol() -> f64 {
    1e-6
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    grid: GridSpec,
    flux: FluxModel,
    u0: DataSpec,
    /// Perturbation profile with sup norm 1.
    w: DataSpec,
    x: Vec<f64>,
    t: f64,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default = "default_probe")]
    r_probe: f64,
    #[serde(default = "default_perturb_tol")]
    tol: f64,
    #[serde(default)]
    scheme: SchemeConfig,
    #[serde(default)]
    funnel: FunnelConfig,
}

pub fn perturb_cmd(value: Value, sink: &mut Sink) -> Result<Outcome> {
    let cfg: PerturbConfig = typed(value)?;
    let grid = cfg.grid.build()?;
    checked_flux(&cfg.flux, &grid)?;
    checked_scheme(&cfg.scheme)?;
    let u0 = cfg.u0.build(&grid, "u0")?;
    let w = cfg.w.build(&grid, "w")?;
    let x = point(&cfg.x, &grid, "x")?;
    let r = perturbation_test(&cfg.flux, &u0, &w, x, cfg.t, cfg.eps, cfg.r_probe, &cfg.scheme, &cfg.funnel)?;
    sink.series(&[&r])?;
    io::write_raster(sink.raster_path("u0.fnlr")?, &u0.to_raster())?;
    io::write_raster(sink.raster_path("w.fnlr")?, &w.to_raster())?;
    let verdict = Verdict::at_most("u(t) unchanged on the probe ball", r.difference, 0.0, cfg.tol, "tol");
    outcome(&cfg, verdict, serde_json::to_value(&r)?)
}

fn default_samples() -> usize {
    DEFAULT_RSTAR_SAMPLES
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossCheckSpec {
    #[serde(default)]
    scheme: SchemeConfig,
    #[serde(default = "default_support_tol")]
    support_tol: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfineConfig {
    scenario: ConfinementScenario,
    #[serde(default)]
    funnel: FunnelConfig,
    /// Radii `R*` sampled on `[Rminus, Rplus]` for the condition.
    #[serde(default = "default_samples")]
    samples: usize,
    /// Rotation rates for `confine sweep`.
    #[serde(default)]
    omegas: Option<Vec<f64>>,
    /// Solve the controlled conservation law as well and compare supports.
    #[serde(default)]
    cross_check: Option<CrossCheckSpec>,
}

fn confine_config(value: Value) -> Result<ConfineConfig> {
    let cfg: ConfineConfig = typed(value)?;
    cfg.scenario.validate().map_err(|e| anyhow!("config key `scenario`: {e}"))?;
    Ok(cfg)
}

#[derive(Serialize)]
struct ConditionRow {
    rstar: f64,
    lhs: f64,
}

pub fn confine_check_cmd(value: Value, sink: &mut Sink) -> Result<Outcome> {
    let cfg = confine_config(value)?;
    let v = check_condition_with(&cfg.scenario, cfg.samples)?;
    let rows: Vec<ConditionRow> = v.rstar.iter().zip(&v.lhs).map(|(&rstar, &lhs)| ConditionRow { rstar, lhs }).collect();
    sink.series(&rows)?;
    let verdict = Verdict::exact("max over R* ∈ [Rminus, Rplus] of the condition integral < −c", v.holds);
    let results = json!({
        "holds": v.holds,
        "margin": v.margin,
        "worst_rstar": v.worst_rstar,
        "max_lhs": v.lhs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "c": cfg.scenario.bound(),
        "samples": v.rstar.len(),
    });
    outcome(&cfg, verdict, results)
}

fn planar(cfg: &ConfineConfig) -> Result<()> {
    if cfg.scenario.n != 2 {
        bail!("config key `scenario.n`: simulation runs in the plane only, got n = {}", cfg.scenario.n);
    }
    Ok(())
}

#[derive(Serialize)]
struct RadiusRow {
    time: f64,
    cells: usize,
    max_radius: f64,
}

pub fn confine_simulate_cmd(value: Value, sink: &mut Sink) -> Result<Outcome> {
    let cfg = confine_config(value)?;
    planar(&cfg)?;
    let s = &cfg.scenario;
    let grid = s.grid().map_err(|e| anyhow!("config key `scenario.grid`: {e}"))?;
    let control = s.control_path()?;
    let k0 = s.initial_set(&grid).map_err(|e| anyhow!("config key `scenario.initial`: {e}"))?;
    let r = simulate_confinement(s, &control, &k0, s.horizon, &cfg.funnel)?;
    let rows: Vec<RadiusRow> = r
        .funnel
        .times()
        .iter()
        .zip(r.funnel.slices())
        .zip(&r.max_radius)
        .map(|((&time, slice), &max_radius)| RadiusRow { time, cells: slice.count(), max_radius })
        .collect();
    sink.series(&rows)?;
    io::write_funnel(sink.raster_path("funnel")?, &r.funnel)?;
    let peak = r.max_radius.iter().copied().fold(0.0, f64::max);
    let h = grid.spacing();
    let mut verdict = Verdict {
        pass: r.confined,
        check: "every slice ⊆ B(0, Rplus) and off the grid edge".into(),
        theory_holds: Some(peak <= s.r_plus && !r.touched_boundary),
        tolerance: Some(2.0 * h),
        tolerance_basis: Some("2 · spacing".into()),
    };
    let cross = match &cfg.cross_check {
        Some(cc) => {
            checked_scheme(&cc.scheme)?;
            let x = pde_cross_check(s, &control, &k0, s.horizon, &cc.scheme, &cfg.funnel, cc.support_tol)?;
            verdict = verdict.and(Verdict::at_most(
                "spt u(t) ⊆ funnel slice",
                x.worst_protrusion,
                0.0,
                x.allowance,
                "2 · spacing",
            ));
            Some(x)
        }
        None => None,
    };
    let results = json!({
        "confined": r.confined,
        "touched_boundary": r.touched_boundary,
        "max_radius": peak,
        "allowance_radius": r.allowance_radius,
        "omega": r.omega,
        "dt": r.dt,
        "condition": { "holds": r.condition.holds, "margin": r.condition.margin, "worst_rstar": r.condition.worst_rstar },
        "cross_check": cross,
    });
    let mut out = outcome(&cfg, verdict, results)?;
    out.warnings = r.warnings;
    Ok(out)
}

pub fn confine_sweep_cmd(value: Value, sink: &mut Sink) -> Result<Outcome> {
    let cfg = confine_config(value)?;
    planar(&cfg)?;
    let s = &cfg.scenario;
    let omegas = cfg.omegas.as_ref().ok_or_else(|| anyhow!("config key `omegas`: required for a sweep"))?;
    if omegas.is_empty() {
        bail!("config key `omegas`: empty list");
    }
    let grid = s.grid().map_err(|e| anyhow!("config key `scenario.grid`: {e}"))?;
    let k0 = s.initial_set(&grid).map_err(|e| anyhow!("config key `scenario.initial`: {e}"))?;
    let rows = sweep_omega(s, &k0, omegas, s.horizon, &cfg.funnel)?;
    sink.series(&rows)?;
    let all = rows.iter().all(|r| r.confined);
    let verdict = Verdict {
        pass: all,
        check: "every rotation rate confines".into(),
        theory_holds: Some(rows.iter().all(|r| r.max_radius <= s.r_plus && !r.touched_boundary)),
        tolerance: Some(2.0 * grid.spacing()),
        tolerance_basis: Some("2 · spacing".into()),
    };
    let results = json!({
        "confined": rows.iter().filter(|r| r.confined).count(),
        "runs": rows.len(),
        "rows": rows,
    });
    outcome(&cfg, verdict, results)
}

fn default_rel_tol() -> f64 {
    0.05
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentConfig {
    grid: GridSpec,
    set: SetSpec,
    radii: Vec<f64>,
    /// Known content to compare against.
    #[serde(default)]
    expected: Option<f64>,
    #[serde(default = "default_rel_tol")]
    rel_tol: f64,
}

#[derive(Serialize)]
struct QuotientRow {
    r: f64,
    quotient: f64,
}

pub fn geom_content_cmd(value: Value, sink: &mut Sink) -> Result<Outcome> {
    let cfg: ContentConfig = typed(value)?;
    let grid = cfg.grid.build()?;
    let set = cfg.set.build(&grid, "set")?;
    let m = minkowski_content(&set, &cfg.radii).map_err(|e| anyhow!("config key `radii`: {e}"))?;
    let rows: Vec<QuotientRow> = m.table.iter().map(|&(r, quotient)| QuotientRow { r, quotient }).collect();
    sink.series(&rows)?;
    io::write_mask(sink.raster_path("set.fnlr")?, &set)?;
    let verdict = match cfg.expected {
        Some(e) => Verdict::at_most(
            "content = expected",
            (m.content - e).abs(),
            0.0,
            cfg.rel_tol * e.abs(),
            "rel_tol · |expected|",
        ),
        None => Verdict::none(),
    };
    let results = json!({
        "content": m.content,
        "slope": m.slope,
        "measure": measure(&set),
        "relative_error": cfg.expected.map(|e| (m.content - e).abs() / e.abs()),
    });
    outcome(&cfg, verdict, results)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubularConfig {
    grid: GridSpec,
    a: SetSpec,
    b: SetSpec,
    r: f64,
}

#[derive(Serialize)]
struct TubularRow {
    measure_a: f64,
    measure_b: f64,
    sym_diff: f64,
    bound: f64,
    hausdorff: f64,
}

pub fn geom_tubular_cmd(value: Value, sink: &mut Sink) -> Result<Outcome> {
    let cfg: TubularConfig = typed(value)?;
    let grid = cfg.grid.build()?;
    if grid.dim() != 2 {
        bail!("config key `grid.dim`: the tubular bound is evaluated in the plane");
    }
    let a = cfg.a.build(&grid, "a")?;
    let b = cfg.b.build(&grid, "b")?;
    let h = grid.spacing();
    let tube_tol = 2.0 * h;
    let (ta, tb) = (is_tubular(&a, cfg.r, tube_tol)?, is_tubular(&b, cfg.r, tube_tol)?);
    let lhs = sym_diff_measure(&a, &b)?;
    let bound = sym_diff_bound(&a, &b, cfg.r)?;
    let hausdorff = hausdorff_distance(&a, &b)?;
    let slack = PI * (a.diameter() + b.diameter()) * h;
    io::write_mask(sink.raster_path("a.fnlr")?, &a)?;
    io::write_mask(sink.raster_path("b.fnlr")?, &b)?;
    sink.series(&[TubularRow { measure_a: measure(&a), measure_b: measure(&b), sym_diff: lhs, bound, hausdorff }])?;
    let verdict = Verdict::exact("A and B are r-tubular", ta && tb).and(Verdict::at_most(
        "|A △ B| ≤ log bound",
        lhs,
        bound,
        slack,
        "π (diam A + diam B) · spacing",
    ));
    let results = json!({
        "tubular_a": ta,
        "tubular_b": tb,
        "sym_diff": lhs,
        "bound": bound,
        "hausdorff": hausdorff,
        "diameter_a": a.diameter(),
        "diameter_b": b.diameter(),
    });
    outcome(&cfg, verdict, results)
}
