//! Browser bindings for three small runs: the domain of dependence of a
//! Burgers solution, the confinement condition, and a controlled funnel.
//!
//! Every entry point takes plain numbers or a JSON string and returns JSON.
//! The `*_json` functions are the same computations without the bindings.

use funnel_core::confinement::{check_condition, simulate_confinement, ConfinementScenario};
use funnel_core::conservation::{solve, Field, SchemeConfig};
use funnel_core::estimates::{domain_of_dependence, FunnelConfig};
use funnel_core::geometry::Grid;
use funnel_core::inclusion::FluxModel;
use serde::Serialize;
use wasm_bindgen::prelude::*;

type Result<T> = std::result::Result<T, String>;

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

#[derive(Serialize)]
pub struct DodView {
    pub xs: Vec<f64>,
    pub u0: Vec<f64>,
    pub ut: Vec<f64>,
    pub point: f64,
    pub time: f64,
    /// Leftmost and rightmost cell centres of the estimate.
    pub interval: [f64; 2],
    pub cmax: f64,
}

/// Burgers data `amplitude · (1 − (x/2)²)²₊` on `[-3, 5]`, solved to `t`, with
/// the backward funnel of `x`.
pub fn burgers_dod_view(amplitude: f64, x: f64, t: f64, cells: usize) -> Result<DodView> {
    if !(2..=4096).contains(&cells) {
        return Err(format!("cells = {cells} outside 2..=4096"));
    }
    let grid = Grid::line(-3.0, 5.0, cells).map_err(text)?;
    let flux = FluxModel::burgers(1).map_err(text)?;
    let u0 = Field::from_fn(grid.clone(), |p| amplitude * (1.0 - (p[0] / 2.0).powi(2)).max(0.0).powi(2))
        .map_err(text)?;
    let est = domain_of_dependence(&flux, &grid, u0.min(), u0.max(), [x, 0.0], t, &FunnelConfig::default())
        .map_err(text)?;
    let cfg = SchemeConfig { snapshots: 1, ..SchemeConfig::default() };
    let ut = solve(&flux, &u0, t, &cfg).map_err(text)?;
    let centres: Vec<f64> = est.set.cells().map(|c| grid.center(c)[0]).collect();
    let lo = centres.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = centres.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DodView {
        xs: (0..cells).map(|i| grid.center(i)[0]).collect(),
        u0: u0.values().to_vec(),
        ut: ut.last().values().to_vec(),
        point: est.point[0],
        time: t,
        interval: [lo, hi],
        cmax: est.cmax,
    })
}

fn scenario(json: &str) -> Result<ConfinementScenario> {
    let s: ConfinementScenario = serde_json::from_str(json).map_err(|e| format!("scenario: {e}"))?;
    s.validate().map_err(text)?;
    Ok(s)
}

pub fn confine_check_json(scenario_json: &str) -> Result<String> {
    let s = scenario(scenario_json)?;
    let v = check_condition(&s).map_err(text)?;
    serde_json::to_string(&v).map_err(text)
}

#[derive(Serialize)]
pub struct FunnelView {
    pub cells: usize,
    pub lo: f64,
    pub hi: f64,
    /// Per cell, the index of the first stored slice containing it (−1 if none).
    pub first_hit: Vec<i32>,
    pub slices: usize,
    pub confined: bool,
    pub touched_boundary: bool,
    pub max_radius: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub omega: f64,
    pub warnings: Vec<String>,
}

/// Controlled funnel from the scenario's initial set; the grid defaults to
/// 64 cells to keep the page responsive.
pub fn confine_simulate_view(scenario_json: &str) -> Result<FunnelView> {
    let mut s = scenario(scenario_json)?;
    if s.n != 2 {
        return Err("simulation runs in the plane, set n = 2".into());
    }
    if s.grid.is_none() {
        let half = 1.25 * (s.radius + s.r_plus);
        s.grid = Some(funnel_core::confinement::SquareGrid { lo: -half, hi: half, cells: 64 });
    }
    let grid = s.grid().map_err(text)?;
    let control = s.control_path().map_err(text)?;
    let k0 = s.initial_set(&grid).map_err(text)?;
    let r = simulate_confinement(&s, &control, &k0, s.horizon, &FunnelConfig::default()).map_err(text)?;
    let mut first_hit = vec![-1; grid.len()];
    for (k, slice) in r.funnel.slices().iter().enumerate() {
        for c in slice.cells() {
            if first_hit[c] < 0 {
                first_hit[c] = k as i32;
            }
        }
    }
    Ok(FunnelView {
        cells: grid.extents()[0],
        lo: grid.origin()[0],
        hi: grid.upper()[0],
        first_hit,
        slices: r.funnel.len(),
        confined: r.confined,
        touched_boundary: r.touched_boundary,
        max_radius: r.max_radius.iter().copied().fold(0.0, f64::max),
        r_minus: s.r_minus,
        r_plus: s.r_plus,
        omega: r.omega,
        warnings: r.warnings,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    r.and_then(|v| serde_json::to_string(&v).map_err(text)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn burgers_dod(amplitude: f64, x: f64, t: f64, cells: usize) -> std::result::Result<String, JsError> {
    to_js(burgers_dod_view(amplitude, x, t, cells))
}

#[wasm_bindgen]
pub fn confine_check(scenario_json: &str) -> std::result::Result<String, JsError> {
    confine_check_json(scenario_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn confine_simulate(scenario_json: &str) -> std::result::Result<String, JsError> {
    to_js(confine_simulate_view(scenario_json))
}
