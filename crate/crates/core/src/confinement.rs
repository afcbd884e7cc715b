//! The integral confinement condition for fluxes `ψ(|x − ξ|)(x − ξ)u + G(u)`
//! and funnels driven by a moving control point ξ(t).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::conservation::{solve, Field, SchemeConfig};
use crate::estimates::{FunnelConfig, SupportRow};
use crate::geometry::{dilate, directed_hausdorff, support_of_field, Grid, GridSet};
use crate::inclusion::{propagate, Direction, Drift, FluxModel, Funnel, Inclusion, Nonlinearity, VelocitySet};
use crate::{map_indices, Error, Point, Result};

pub const DEFAULT_NODES: usize = 64;
pub const DEFAULT_RSTAR_SAMPLES: usize = 101;
pub const DEFAULT_DISK_VERTICES: usize = 32;

/// Radial profile ψ(r) of the controlled drift `ψ(|x − ξ|)(x − ξ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    Constant { value: f64 },
    /// Piecewise-linear through `(radii[i], values[i])`, constant beyond the ends.
    Table { radii: Vec<f64>, values: Vec<f64> },
    /// `coefficient · r^exponent`.
    #[serde(rename = "powerlaw")]
    PowerLaw { coefficient: f64, exponent: f64 },
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Table { radii, values } => {
                let k = radii.partition_point(|&q| q <= r);
                if k == 0 {
                    values[0]
                } else if k == radii.len() {
                    values[k - 1]
                } else {
                    let s = (r - radii[k - 1]) / (radii[k] - radii[k - 1]);
                    values[k - 1] + s * (values[k] - values[k - 1])
                }
            }
            Self::PowerLaw { coefficient, exponent } => coefficient * r.powf(*exponent),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { value } if !value.is_finite() => {
                Err(Error::InvalidArgument("psi value must be finite".into()))
            }
            Self::Table { radii, values } => {
                if radii.len() < 2 || radii.len() != values.len() {
                    return Err(Error::InvalidArgument(
                        "psi table needs at least two (radius, value) pairs of equal length".into(),
                    ));
                }
                if radii.windows(2).any(|w| !(w[0] < w[1])) || radii[0] < 0.0 {
                    return Err(Error::InvalidArgument("psi table radii must increase from r ≥ 0".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("psi table values must be finite".into()));
                }
                Ok(())
            }
            Self::PowerLaw { coefficient, exponent } if !(coefficient.is_finite() && *exponent >= 0.0) => {
                Err(Error::InvalidArgument("psi power law needs finite coefficient and exponent ≥ 0".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Control trajectory ξ(t) on the circle of radius R.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlPath {
    Rotating { radius: f64, omega: f64 },
}

impl ControlPath {
    pub fn at(&self, t: f64) -> Point {
        match self {
            Self::Rotating { radius, omega } => [radius * (omega * t).cos(), radius * (omega * t).sin()],
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Self::Rotating { radius, .. } => *radius,
        }
    }

    /// Lipschitz constant of `t ↦ ξ(t)`.
    pub fn speed(&self) -> f64 {
        match self {
            Self::Rotating { radius, omega } => radius * omega.abs(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Rotating { radius, omega } => format!("rotating R={radius} omega={omega}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Rotating { radius, omega } if !(*radius > 0.0 && omega.is_finite()) => {
                Err(Error::InvalidArgument("rotating control needs R > 0 and finite omega".into()))
            }
            _ => Ok(()),
        }
    }
}

pub fn rotating_control(radius: f64, omega: f64) -> Result<ControlPath> {
    let path = ControlPath::Rotating { radius, omega };
    path.validate()?;
    Ok(path)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`: Lanczos below 10, Stirling series above.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    if x >= 10.0 {
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
        return (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series;
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Left-hand side of the confinement condition for an arbitrary profile,
/// with an `nodes`-point Gauss–Legendre rule in θ.
pub fn condition_lhs_with(
    psi: impl Fn(f64) -> f64,
    n: usize,
    radius: f64,
    rstar: f64,
    nodes: usize,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("dimension {n} must be at least 2")));
    }
    if !(radius > 0.0 && rstar > 0.0) {
        return Err(Error::InvalidArgument(format!("radii must be positive, got R = {radius}, R* = {rstar}")));
    }
    if nodes == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    let (xs, ws) = gauss_legendre(nodes);
    let mut sum = 0.0;
    for (&x, &w) in xs.iter().zip(&ws) {
        let theta = 0.5 * PI * (x + 1.0);
        let (sin, cos) = theta.sin_cos();
        let dist = (radius * radius + rstar * rstar - 2.0 * rstar * radius * cos).max(0.0).sqrt();
        let value = psi(dist);
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!("psi({dist}) is not finite")));
        }
        sum += w * value * (rstar - radius * cos) * sin.powi(n as i32 - 2);
    }
    let integral = 0.5 * PI * sum;
    let prefactor = (ln_gamma(n as f64 / 2.0) - ln_gamma((n as f64 - 1.0) / 2.0)).exp() / PI.sqrt();
    Ok(prefactor * integral)
}

pub fn condition_lhs(psi: &RadialProfile, n: usize, radius: f64, rstar: f64) -> Result<f64> {
    condition_lhs_with(|r| psi.eval(r), n, radius, rstar, DEFAULT_NODES)
}

/// `c · tanh(u) · e` with `|e| ≤ 1`, or zero; `c` bounds `|G'|` either way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceTerm {
    Zero {
        #[serde(default)]
        c: f64,
    },
    Tanh {
        c: f64,
        #[serde(default = "unit_x")]
        direction: Point,
    },
}

fn unit_x() -> Point {
    [1.0, 0.0]
}

impl SourceTerm {
    pub fn bound(&self) -> f64 {
        match self {
            Self::Zero { c } | Self::Tanh { c, .. } => *c,
        }
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        match self {
            Self::Zero { .. } => Nonlinearity::Zero,
            Self::Tanh { c, direction } => Nonlinearity::Tanh { c: *c, direction: *direction },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.bound();
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("G bound c = {c} must be finite and non-negative")));
        }
        if let Self::Tanh { direction: e, .. } = self {
            if !(e[0].hypot(e[1]) <= 1.0 + 1e-12) {
                return Err(Error::InvalidArgument("G direction must have norm at most 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSpec {
    /// `omega` defaults to `6π|ψ(R)|`.
    Rotating {
        #[serde(default)]
        omega: Option<f64>,
    },
}

impl Default for ControlSpec {
    fn default() -> Self {
        Self::Rotating { omega: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSet {
    /// The cell containing the origin.
    Point,
    Ball { radius: f64 },
}

impl Default for InitialSet {
    fn default() -> Self {
        Self::Point
    }
}

/// Square simulation box `[lo, hi]²` with `cells` cells per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareGrid {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfinementScenario {
    pub n: usize,
    pub psi: RadialProfile,
    #[serde(rename = "G")]
    pub source: SourceTerm,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "Rminus")]
    pub r_minus: f64,
    #[serde(rename = "Rplus")]
    pub r_plus: f64,
    #[serde(default)]
    pub control: ControlSpec,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub grid: Option<SquareGrid>,
    #[serde(default)]
    pub initial: InitialSet,
}

fn default_horizon() -> f64 {
    5.0
}

impl ConfinementScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("n = {} must be at least 2", self.n)));
        }
        self.psi.validate()?;
        self.source.validate()?;
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("R = {} must be positive", self.radius)));
        }
        if !(self.r_minus > 0.0 && self.r_minus <= self.r_plus && self.r_plus.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < Rminus <= Rplus, got {} and {}",
                self.r_minus, self.r_plus
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("T = {} must be positive", self.horizon)));
        }
        let reach = self.radius + self.r_plus;
        for k in 0..=256 {
            let r = reach * k as f64 / 256.0;
            if !self.psi.eval(r).is_finite() {
                return Err(Error::InvalidArgument(format!("psi is not finite at r = {r}")));
            }
        }
        if let ControlSpec::Rotating { omega: Some(w) } = self.control {
            if !w.is_finite() {
                return Err(Error::InvalidArgument("control omega must be finite".into()));
            }
        }
        if let InitialSet::Ball { radius } = self.initial {
            if !(radius > 0.0 && radius <= self.r_minus) {
                return Err(Error::InvalidArgument(format!(
                    "initial ball radius {radius} must lie in (0, Rminus]"
                )));
            }
        }
        Ok(())
    }

    pub fn bound(&self) -> f64 {
        self.source.bound()
    }

    /// `6π|ψ(R)|` unless the scenario fixes ω: three turns per attraction time `1/|ψ(R)|`.
    pub fn omega(&self) -> f64 {
        match self.control {
            ControlSpec::Rotating { omega: Some(w) } => w,
            ControlSpec::Rotating { omega: None } => 6.0 * PI * self.psi.eval(self.radius).abs(),
        }
    }

    pub fn control_path(&self) -> Result<ControlPath> {
        rotating_control(self.radius, self.omega())
    }

    /// The configured box, or `[−L, L]²` with `L = 1.25(R + Rplus)` and 128 cells.
    pub fn grid(&self) -> Result<Grid> {
        match &self.grid {
            Some(g) => Grid::square(g.lo, g.hi, g.cells),
            None => {
                let half = 1.25 * (self.radius + self.r_plus);
                Grid::square(-half, half, 128)
            }
        }
    }

    pub fn initial_set(&self, grid: &Grid) -> Result<GridSet> {
        match self.initial {
            InitialSet::Point => GridSet::singleton(grid.clone(), [0.0, 0.0]),
            InitialSet::Ball { radius } => {
                let set = GridSet::ball(grid.clone(), [0.0, 0.0], radius);
                if set.is_empty() {
                    return Err(Error::BelowResolution { radius, min: grid.spacing() });
                }
                Ok(set)
            }
        }
    }

    /// The flux `ψ(|x − ξ|)(x − ξ)u + G(u)` driven by `control`.
    pub fn flux(&self, control: &ControlPath) -> Result<FluxModel> {
        FluxModel::new(
            2,
            Drift::Radial { psi: self.psi.clone(), control: control.clone() },
            self.source.nonlinearity(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub holds: bool,
    /// `−c − max LHS`; positive when the condition holds.
    pub margin: f64,
    pub worst_rstar: f64,
    pub rstar: Vec<f64>,
    pub lhs: Vec<f64>,
}

/// Evaluates the condition on `samples` uniform radii in `[Rminus, Rplus]`.
pub fn check_condition_with(scenario: &ConfinementScenario, samples: usize) -> Result<ConditionVerdict> {
    scenario.validate()?;
    let samples = samples.max(2);
    let (lo, hi) = (scenario.r_minus, scenario.r_plus);
    let rstar: Vec<f64> = (0..samples).map(|k| lo + (hi - lo) * k as f64 / (samples - 1) as f64).collect();
    let lhs = map_indices(samples, |k| condition_lhs(&scenario.psi, scenario.n, scenario.radius, rstar[k]))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let (worst, max) = lhs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    let margin = -scenario.bound() - max;
    Ok(ConditionVerdict { holds: max < -scenario.bound(), margin, worst_rstar: rstar[worst], rstar, lhs })
}

pub fn check_condition(scenario: &ConfinementScenario) -> Result<ConditionVerdict> {
    check_condition_with(scenario, DEFAULT_RSTAR_SAMPLES)
}

/// Disk of radius `c` about `ψ(|x − ξ|)(x − ξ)` as a circumscribed polygon.
pub fn controlled_velocity_set(scenario: &ConfinementScenario, xi: Point, x: Point) -> Result<VelocitySet> {
    let r = xi[0].hypot(xi[1]);
    if (r - scenario.radius).abs() > 1e-9 * scenario.radius.max(1.0) {
        return Err(Error::InvalidArgument(format!("control point at radius {r}, expected {}", scenario.radius)));
    }
    let d = [x[0] - xi[0], x[1] - xi[1]];
    let s = scenario.psi.eval(d[0].hypot(d[1]));
    Ok(VelocitySet::disk([s * d[0], s * d[1]], scenario.bound(), DEFAULT_DISK_VERTICES))
}

/// `ẋ ∈ ψ(|x − ξ(t)|)(x − ξ(t)) + B(0, c)`.
#[derive(Clone, Debug)]
pub struct ControlledInclusion {
    drift: Drift,
    disk: VelocitySet,
}

impl ControlledInclusion {
    pub fn new(scenario: &ConfinementScenario, control: &ControlPath) -> Self {
        Self {
            drift: Drift::Radial { psi: scenario.psi.clone(), control: control.clone() },
            disk: VelocitySet::disk([0.0, 0.0], scenario.bound(), DEFAULT_DISK_VERTICES),
        }
    }
}

impl Inclusion for ControlledInclusion {
    fn dim(&self) -> usize {
        2
    }

    fn drift(&self, t: f64, x: Point) -> Point {
        self.drift.eval(t, x)
    }

    fn shape(&self, _t0: f64, _t1: f64) -> Result<VelocitySet> {
        Ok(self.disk.clone())
    }

    fn max_speed(&self, grid: &Grid, _t0: f64, _t1: f64) -> Result<f64> {
        Ok(self.drift.sup_norm(grid) + self.disk.max_norm())
    }
}

#[derive(Clone, Debug)]
pub struct ConfinementReport {
    pub funnel: Funnel,
    pub condition: ConditionVerdict,
    pub omega: f64,
    pub dt: f64,
    /// Largest `|x|` over member cells, per slice.
    pub max_radius: Vec<f64>,
    /// Outer radius of the target, `Rplus + 2h`.
    pub allowance_radius: f64,
    /// A slice reached the outermost cells, so the box may have clipped it.
    pub touched_boundary: bool,
    pub confined: bool,
    pub warnings: Vec<String>,
}

fn max_radius(set: &GridSet) -> f64 {
    let grid = set.grid();
    set.cells()
        .map(|c| {
            let p = grid.center(c);
            p[0].hypot(p[1])
        })
        .fold(0.0, f64::max)
}

fn touches_boundary(set: &GridSet) -> bool {
    let [nx, ny] = set.grid().extents();
    set.cells().any(|c| {
        let (ix, iy) = set.grid().coords(c);
        ix == 0 || iy == 0 || ix + 1 == nx || iy + 1 == ny
    })
}

fn controlled_funnel(
    scenario: &ConfinementScenario,
    control: &ControlPath,
    k0: &GridSet,
    t_end: f64,
    cfg: &FunnelConfig,
    align: usize,
) -> Result<(Funnel, f64)> {
    let inc = ControlledInclusion::new(scenario, control);
    let dt = cfg.step(&inc, k0.grid(), 0.0, t_end, align)?;
    Ok((propagate(&inc, k0, 0.0, t_end, dt, Direction::Forward)?, dt))
}

/// Forward funnel of `k0` under the controlled inclusion along `control`, and
/// whether every slice stays inside `dilate(B(0, Rplus), 2h)`.
pub fn simulate_confinement(
    scenario: &ConfinementScenario,
    control: &ControlPath,
    k0: &GridSet,
    t_end: f64,
    cfg: &FunnelConfig,
) -> Result<ConfinementReport> {
    scenario.validate()?;
    if k0.grid().dim() != 2 {
        return Err(Error::InvalidArgument("confinement runs on planar grids only".into()));
    }
    let grid = k0.grid();
    let h = grid.spacing();
    let start = GridSet::ball(grid.clone(), [0.0, 0.0], scenario.r_minus);
    if !k0.is_subset(&start)? {
        return Err(Error::Precondition(format!("initial set leaves B(0, {})", scenario.r_minus)));
    }
    let condition = check_condition(scenario)?;
    let mut warnings = Vec::new();
    if !condition.holds {
        warnings.push(format!("confinement condition fails (margin {:.3e})", condition.margin));
    }
    let (funnel, dt) = controlled_funnel(scenario, control, k0, t_end, cfg, 1)?;
    let target = dilate(&GridSet::ball(grid.clone(), [0.0, 0.0], scenario.r_plus), 2.0 * h)?;
    let mut inside = true;
    let mut touched = false;
    for slice in funnel.slices() {
        inside &= slice.is_subset(&target)?;
        touched |= touches_boundary(slice);
    }
    if touched {
        warnings.push("funnel reached the edge of the box".into());
    }
    let max_radius = funnel.slices().iter().map(max_radius).collect();
    Ok(ConfinementReport {
        omega: match control {
            ControlPath::Rotating { omega, .. } => *omega,
        },
        funnel,
        condition,
        dt,
        max_radius,
        allowance_radius: scenario.r_plus + 2.0 * h,
        touched_boundary: touched,
        confined: inside && !touched,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub rows: Vec<SupportRow>,
    pub worst_protrusion: f64,
    pub allowance: f64,
    pub support_tol: f64,
    pub pass: bool,
}

/// Solves the controlled conservation law from the indicator of `k0` and
/// measures how far the numerical support leaves the funnel slices.
pub fn pde_cross_check(
    scenario: &ConfinementScenario,
    control: &ControlPath,
    k0: &GridSet,
    t_end: f64,
    scheme: &SchemeConfig,
    cfg: &FunnelConfig,
    support_tol: f64,
) -> Result<CrossCheck> {
    scenario.validate()?;
    let grid = k0.grid();
    let flux = scenario.flux(control)?;
    let mask = k0.mask();
    let u0 = Field::from_fn(grid.clone(), |p| match grid.locate(p) {
        Some(c) if mask[c] => 1.0,
        _ => 0.0,
    })?;
    let traj = solve(&flux, &u0, t_end, scheme)?;
    let (funnel, _) = controlled_funnel(scenario, control, k0, t_end, cfg, scheme.snapshots)?;
    let mut rows = Vec::with_capacity(traj.fields.len());
    let mut worst: f64 = 0.0;
    for field in &traj.fields {
        let spt = support_of_field(&field.to_raster(), support_tol)?;
        let slice = funnel.slice_at(field.time());
        let protrusion = if spt.is_empty() { 0.0 } else { directed_hausdorff(&spt, slice)? };
        worst = worst.max(protrusion);
        rows.push(SupportRow {
            time: field.time(),
            support_cells: spt.count(),
            slice_cells: slice.count(),
            protrusion,
        });
    }
    let allowance = 2.0 * grid.spacing();
    Ok(CrossCheck { rows, worst_protrusion: worst, allowance, support_tol, pass: worst <= allowance * (1.0 + 1e-9) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub omega: f64,
    pub max_radius: f64,
    pub touched_boundary: bool,
    pub confined: bool,
}

/// Runs [`simulate_confinement`] once per rotation rate.
pub fn sweep_omega(
    scenario: &ConfinementScenario,
    k0: &GridSet,
    omegas: &[f64],
    t_end: f64,
    cfg: &FunnelConfig,
) -> Result<Vec<SweepRow>> {
    map_indices(omegas.len(), |k| {
        let control = rotating_control(scenario.radius, omegas[k])?;
        let r = simulate_confinement(scenario, &control, k0, t_end, cfg)?;
        Ok(SweepRow {
            omega: omegas[k],
            max_radius: r.max_radius.iter().copied().fold(0.0, f64::max),
            touched_boundary: r.touched_boundary,
            confined: r.confined,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hausdorff_distance;
    use approx::assert_abs_diff_eq;

    fn scenario(psi: RadialProfile, c: f64, r_minus: f64, r_plus: f64) -> ConfinementScenario {
        ConfinementScenario {
            n: 2,
            psi,
            source: SourceTerm::Tanh { c, direction: [1.0, 0.0] },
            radius: 1.0,
            r_minus,
            r_plus,
            control: ControlSpec::default(),
            horizon: 5.0,
            grid: None,
            initial: InitialSet::Point,
        }
    }

    fn constant(value: f64) -> RadialProfile {
        RadialProfile::Constant { value }
    }

    // composite Simpson in θ, independent of the Gauss–Legendre path
    fn simpson_lhs(psi: impl Fn(f64) -> f64, n: usize, radius: f64, rstar: f64) -> f64 {
        let m = 20_000;
        let h = PI / m as f64;
        let g = |th: f64| {
            let d = (radius * radius + rstar * rstar - 2.0 * radius * rstar * th.cos()).max(0.0).sqrt();
            psi(d) * (rstar - radius * th.cos()) * th.sin().powi(n as i32 - 2)
        };
        let mut s = g(0.0) + g(PI);
        for k in 1..m {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
        }
        // Γ(1)/Γ(1/2) = 1/√π, Γ(3/2)/Γ(1) = √π/2
        let prefactor = match n {
            2 => 1.0 / PI,
            3 => 0.5,
            _ => unreachable!(),
        };
        prefactor * s * h / 3.0
    }

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(64);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        for deg in [2, 10, 40, 126] {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            assert_abs_diff_eq!(q, 2.0 / (deg as f64 + 1.0), epsilon = 1e-13);
        }
        let (x, w) = gauss_legendre(3);
        assert_abs_diff_eq!(x[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn ln_gamma_values() {
        assert_abs_diff_eq!(ln_gamma(0.5), 0.5 * PI.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-13);
        let fact19: f64 = (1..=19).map(|k| (k as f64).ln()).sum();
        assert_abs_diff_eq!(ln_gamma(20.0), fact19, epsilon = 1e-12);
        // recurrence across the Lanczos/Stirling switch
        for x in [0.3, 1.7, 9.25, 9.9, 10.0, 24.5, 49.0] {
            assert_abs_diff_eq!(ln_gamma(x + 1.0) - ln_gamma(x), f64::ln(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_profile_closed_form() {
        for n in [2, 3] {
            for k in [0.5, 1.0, 2.0] {
                for rstar in [0.5, 1.0, 2.0] {
                    let v = condition_lhs(&constant(-k), n, 1.3, rstar).unwrap();
                    assert_abs_diff_eq!(v, -k * rstar, epsilon = 1e-12);
                }
            }
        }
        assert_eq!(condition_lhs(&constant(0.0), 2, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn matches_simpson_for_varying_profiles() {
        let table = RadialProfile::Table { radii: vec![0.0, 1.0, 3.0], values: vec![-2.0, -1.0, 0.5] };
        let power = RadialProfile::PowerLaw { coefficient: -0.7, exponent: 2.0 };
        for psi in [table, power] {
            for n in [2, 3] {
                let gl = condition_lhs(&psi, n, 0.8, 1.4).unwrap();
                let oracle = simpson_lhs(|r| psi.eval(r), n, 0.8, 1.4);
                assert_abs_diff_eq!(gl, oracle, epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn condition_errors() {
        assert!(condition_lhs(&constant(-1.0), 1, 1.0, 1.0).is_err());
        assert!(condition_lhs(&constant(-1.0), 2, 0.0, 1.0).is_err());
        assert!(condition_lhs_with(|_| f64::NAN, 2, 1.0, 1.0, 64).is_err());
    }

    #[test]
    fn condition_verdicts() {
        let v = check_condition(&scenario(constant(-1.0), 0.5, 1.0, 2.0)).unwrap();
        assert!(v.holds);
        assert_abs_diff_eq!(v.margin, 0.5, epsilon = 1e-12);
        assert_eq!(v.worst_rstar, 1.0);
        assert_eq!(v.lhs.len(), 101);
        assert!(!check_condition(&scenario(constant(-0.4), 0.5, 1.0, 2.0)).unwrap().holds);
        assert!(!check_condition(&scenario(constant(0.0), 0.0, 1.0, 2.0)).unwrap().holds);
        assert!(!check_condition(&scenario(constant(-1.0), 10.0, 1.0, 5.0)).unwrap().holds);
    }

    #[test]
    fn velocity_set_examples() {
        let s = scenario(constant(-1.0), 0.5, 1.0, 2.0);
        // circumscribed 32-gon: support lies in [c, c / cos(π/32)]
        let slack = 0.5 / (PI / 32.0).cos() - 0.5;
        let within = |got: f64, want: f64| got >= want - 1e-12 && got <= want + slack + 1e-12;
        let set = controlled_velocity_set(&s, [1.0, 0.0], [2.0, 0.0]).unwrap();
        assert!(within(set.support([1.0, 0.0]), -0.5));
        assert!(within(set.support([-1.0, 0.0]), 1.5));
        assert!(within(set.support([0.6, 0.8]), -0.6 + 0.5));
        let at_xi = controlled_velocity_set(&s, [0.0, 1.0], [0.0, 1.0]).unwrap();
        assert!(within(at_xi.support([0.0, 1.0]), 0.5));
        let flat = scenario(constant(-1.0), 0.0, 1.0, 2.0);
        let single = controlled_velocity_set(&flat, [1.0, 0.0], [2.0, 0.0]).unwrap();
        assert_eq!(single.vertices(), &[[-1.0, 0.0]]);
        assert!(controlled_velocity_set(&s, [2.0, 0.0], [0.0, 0.0]).is_err());
    }

    #[test]
    fn rotating_control_examples() {
        let fixed = rotating_control(2.0, 0.0).unwrap();
        assert_eq!(fixed.at(3.7), [2.0, 0.0]);
        let turning = rotating_control(2.0, 3.0).unwrap();
        let p = turning.at(PI / 3.0);
        assert_abs_diff_eq!(p[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);
        for k in 0..50 {
            let p = turning.at(0.37 * k as f64);
            assert_abs_diff_eq!(p[0].hypot(p[1]), 2.0, epsilon = 1e-12);
        }
        assert!(rotating_control(0.0, 1.0).is_err());
    }

    #[test]
    fn scenario_json_and_defaults() {
        let s: ConfinementScenario = serde_json::from_str(
            r#"{"n": 2, "psi": {"kind": "constant", "value": -1.0}, "G": {"kind": "tanh", "c": 0.5},
                "R": 1.0, "Rminus": 1.0, "Rplus": 2.0, "control": {"kind": "rotating"}}"#,
        )
        .unwrap();
        assert_eq!(s.horizon, 5.0);
        assert_abs_diff_eq!(s.omega(), 6.0 * PI, epsilon = 1e-12);
        assert_eq!(s.grid().unwrap().extents(), [128, 128]);
        let bad = serde_json::from_str::<ConfinementScenario>(
            r#"{"n": 2, "psi": {"kind": "constant", "value": -1.0}, "G": {"kind": "zero"},
                "R": 1.0, "Rminus": 1.0, "Rplus": 2.0, "extra": 1}"#,
        );
        assert!(bad.unwrap_err().to_string().contains("extra"));
        let mut inverted = s.clone();
        inverted.r_plus = 0.5;
        assert!(inverted.validate().is_err());
    }

    #[test]
    fn contraction_toward_fixed_control_follows_characteristic() {
        let mut s = scenario(constant(-1.0), 0.0, 1.0, 2.5);
        s.control = ControlSpec::Rotating { omega: Some(0.0) };
        let grid = Grid::square(-2.0, 2.0, 100).unwrap();
        let h = grid.spacing();
        let x0 = [-0.5, 0.3];
        let k0 = GridSet::singleton(grid.clone(), x0).unwrap();
        let start = grid.center(grid.locate(x0).unwrap());
        let control = s.control_path().unwrap();
        let r = simulate_confinement(&s, &control, &k0, 2.0, &FunnelConfig::default()).unwrap();
        assert!(r.confined);
        // ẋ = −(x − ξ) with ξ = (1, 0)
        let e = (-2.0f64).exp();
        let want = [1.0 + (start[0] - 1.0) * e, start[1] * e];
        let oracle = GridSet::singleton(grid, want).unwrap();
        assert!(hausdorff_distance(r.funnel.last(), &oracle).unwrap() <= 2.0 * h);
    }

    #[test]
    fn zero_profile_grows_balls() {
        let s = scenario(constant(0.0), 0.5, 0.5, 0.8);
        let grid = Grid::square(-2.0, 2.0, 80).unwrap();
        let h = grid.spacing();
        let k0 = GridSet::ball(grid.clone(), [0.0, 0.0], 0.3);
        let control = s.control_path().unwrap();
        let r = simulate_confinement(&s, &control, &k0, 2.0, &FunnelConfig::default()).unwrap();
        assert!(!r.condition.holds && !r.warnings.is_empty());
        assert!(!r.confined);
        let want = dilate(&k0, 1.0).unwrap();
        assert!(hausdorff_distance(r.funnel.last(), &want).unwrap() <= 2.0 * h);
    }

    #[test]
    fn rotating_control_confines_point() {
        let s = scenario(constant(-1.0), 0.5, 1.0, 2.0);
        let grid = s.grid().unwrap();
        let k0 = s.initial_set(&grid).unwrap();
        let control = s.control_path().unwrap();
        let r = simulate_confinement(&s, &control, &k0, 5.0, &FunnelConfig::default()).unwrap();
        assert!(r.condition.holds);
        assert!(r.confined, "{:?}", r.max_radius);
        assert!(r.max_radius.iter().all(|&m| m <= r.allowance_radius));
    }

    #[test]
    fn initial_set_outside_inner_ball_is_rejected() {
        let s = scenario(constant(-1.0), 0.5, 0.5, 2.0);
        let grid = s.grid().unwrap();
        let k0 = GridSet::singleton(grid, [1.0, 0.0]).unwrap();
        let r = simulate_confinement(&s, &s.control_path().unwrap(), &k0, 1.0, &FunnelConfig::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
