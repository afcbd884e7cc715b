use serde::{Deserialize, Serialize};

use crate::confinement::{ControlPath, RadialProfile};
use crate::geometry::Grid;
use crate::{Error, Point, Result};

/// Samples used when a Lipschitz modulus or speed bound has to be estimated.
const PROFILE_SAMPLES: usize = 4096;
/// Safety factor applied to sampled (non-analytic) estimates.
const SAMPLED_SLACK: f64 = 1.01;

/// The `u`-linear part `v(t, x)` of the flux `f = v(t, x)·u + G(u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drift {
    Zero,
    Constant { velocity: Point },
    /// `amplitude · sin(wavenumber · x₁)` along the first axis.
    Sine { amplitude: f64, wavenumber: f64 },
    /// Rigid rotation `ω (−x₂, x₁)`.
    Rotation { omega: f64 },
    /// `ψ(|x − ξ(t)|)(x − ξ(t))` with ξ following `control`.
    Radial { psi: RadialProfile, control: ControlPath },
}

impl Drift {
    pub fn eval(&self, t: f64, x: Point) -> Point {
        match self {
            Self::Zero => [0.0, 0.0],
            Self::Constant { velocity } => *velocity,
            Self::Sine { amplitude, wavenumber } => [amplitude * (wavenumber * x[0]).sin(), 0.0],
            Self::Rotation { omega } => [-omega * x[1], omega * x[0]],
            Self::Radial { psi, control } => {
                let xi = control.at(t);
                let d = [x[0] - xi[0], x[1] - xi[1]];
                let s = psi.eval(d[0].hypot(d[1]));
                [s * d[0], s * d[1]]
            }
        }
    }

    /// Lipschitz modulus in `(t, x)` over the box of `grid`.
    fn lipschitz(&self, grid: &Grid) -> f64 {
        match self {
            Self::Zero | Self::Constant { .. } => 0.0,
            Self::Sine { amplitude, wavenumber } => (amplitude * wavenumber).abs(),
            Self::Rotation { omega } => omega.abs(),
            Self::Radial { psi, control } => {
                let rmax = box_radius(grid) + control.radius();
                let lx = radial_jacobian_bound(psi, rmax);
                lx * control.speed().max(1.0)
            }
        }
    }

    /// Upper bound of `|v(t, x)|` over the box of `grid`.
    pub(crate) fn sup_norm(&self, grid: &Grid) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { velocity } => velocity[0].hypot(velocity[1]),
            Self::Sine { amplitude, .. } => amplitude.abs(),
            Self::Rotation { omega } => omega.abs() * box_radius(grid),
            Self::Radial { psi, control } => {
                let rmax = box_radius(grid) + control.radius();
                match psi {
                    RadialProfile::Constant { value } => value.abs() * rmax,
                    _ => {
                        SAMPLED_SLACK
                            * sample_radii(rmax)
                                .map(|r| (psi.eval(r) * r).abs())
                                .fold(0.0, f64::max)
                    }
                }
            }
        }
    }

    fn needs_plane(&self) -> bool {
        matches!(self, Self::Rotation { .. } | Self::Radial { .. })
    }
}

fn box_radius(grid: &Grid) -> f64 {
    let lo = grid.origin();
    let hi = grid.upper();
    let ax = lo[0].abs().max(hi[0].abs());
    let ay = if grid.dim() == 2 { lo[1].abs().max(hi[1].abs()) } else { 0.0 };
    ax.hypot(ay)
}

fn sample_radii(rmax: f64) -> impl Iterator<Item = f64> {
    (0..=PROFILE_SAMPLES).map(move |j| rmax * j as f64 / PROFILE_SAMPLES as f64)
}

/// Bound on the Jacobian norm of `x ↦ ψ(|x|)x`: the eigenvalues are `ψ(r)`
/// (tangential) and `(rψ(r))'` (radial).
fn radial_jacobian_bound(psi: &RadialProfile, rmax: f64) -> f64 {
    if let RadialProfile::Constant { value } = psi {
        return value.abs();
    }
    let dr = rmax.max(1e-12) / PROFILE_SAMPLES as f64;
    let radii: Vec<f64> = sample_radii(rmax).collect();
    let mut bound: f64 = 0.0;
    for w in radii.windows(2) {
        let q = (w[1] * psi.eval(w[1]) - w[0] * psi.eval(w[0])) / dr;
        bound = bound.max(q.abs()).max(psi.eval(w[0]).abs());
    }
    bound = bound.max(psi.eval(rmax).abs());
    SAMPLED_SLACK * bound
}

/// The state-only part `G(u)` of the flux, with `G(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    Zero,
    /// `u²/2 · e`.
    Quadratic { direction: Point },
    /// `c · tanh(u) · e`, so `|G'| ≤ c|e|`.
    Tanh { c: f64, direction: Point },
    /// `(u²/2, u³/3)`.
    QuadCubic,
}

impl Nonlinearity {
    pub fn value(&self, u: f64) -> Point {
        match self {
            Self::Zero => [0.0, 0.0],
            Self::Quadratic { direction: e } => [0.5 * u * u * e[0], 0.5 * u * u * e[1]],
            Self::Tanh { c, direction: e } => [c * u.tanh() * e[0], c * u.tanh() * e[1]],
            Self::QuadCubic => [0.5 * u * u, u * u * u / 3.0],
        }
    }

    pub fn derivative(&self, u: f64) -> Point {
        match self {
            Self::Zero => [0.0, 0.0],
            Self::Quadratic { direction: e } => [u * e[0], u * e[1]],
            Self::Tanh { c, direction: e } => {
                let s = 1.0 / u.cosh().powi(2);
                [c * s * e[0], c * s * e[1]]
            }
            Self::QuadCubic => [u, u * u],
        }
    }

    /// `sup |G'(u)|` over `u ∈ [lo, hi]`.
    pub fn derivative_bound(&self, lo: f64, hi: f64) -> f64 {
        critical_values(lo, hi)
            .into_iter()
            .map(|u| {
                let d = self.derivative(u);
                d[0].hypot(d[1])
            })
            .fold(0.0, f64::max)
    }

    fn needs_plane(&self) -> bool {
        matches!(self, Self::QuadCubic)
    }
}

/// Values of `u` where every component of `G'` attains its extrema on `[lo, hi]`
/// for the built-in families.
pub fn critical_values(lo: f64, hi: f64) -> [f64; 3] {
    [lo, hi, 0.0f64.clamp(lo.min(hi), hi.max(lo))]
}

/// Flux `f(t, x, u) = v(t, x)·u + G(u)` in one or two space dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxModel {
    pub dim: usize,
    pub drift: Drift,
    pub nonlinearity: Nonlinearity,
}

impl FluxModel {
    pub fn new(dim: usize, drift: Drift, nonlinearity: Nonlinearity) -> Result<Self> {
        let model = Self { dim, drift, nonlinearity };
        model.validate()?;
        Ok(model)
    }

    /// `u²/2` along the first axis in 1D, along `(1, 1)` in 2D.
    pub fn burgers(dim: usize) -> Result<Self> {
        let direction = if dim == 2 { [1.0, 1.0] } else { [1.0, 0.0] };
        Self::new(dim, Drift::Zero, Nonlinearity::Quadratic { direction })
    }

    pub fn linear(dim: usize, velocity: Point) -> Result<Self> {
        Self::new(dim, Drift::Constant { velocity }, Nonlinearity::Zero)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidArgument(format!("flux dimension {} not in {{1, 2}}", self.dim)));
        }
        if self.dim == 1 && (self.drift.needs_plane() || self.nonlinearity.needs_plane()) {
            return Err(Error::InvalidArgument("flux family requires two space dimensions".into()));
        }
        if let Drift::Radial { psi, control } = &self.drift {
            psi.validate()?;
            control.validate()?;
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match (&self.drift, &self.nonlinearity) {
            (Drift::Zero, Nonlinearity::Quadratic { .. }) => "burgers",
            (Drift::Constant { .. }, Nonlinearity::Zero) => "linear",
            (Drift::Zero, Nonlinearity::Zero) => "zero",
            _ => "heterogeneous",
        }
    }

    fn project(&self, p: Point) -> Point {
        if self.dim == 1 {
            [p[0], 0.0]
        } else {
            p
        }
    }

    pub fn flux(&self, t: f64, x: Point, u: f64) -> Point {
        let v = self.drift.eval(t, x);
        let g = self.nonlinearity.value(u);
        self.project([v[0] * u + g[0], v[1] * u + g[1]])
    }

    /// `∂_u f(t, x, u)`.
    pub fn speed(&self, t: f64, x: Point, u: f64) -> Point {
        let v = self.drift.eval(t, x);
        let g = self.nonlinearity.derivative(u);
        self.project([v[0] + g[0], v[1] + g[1]])
    }

    /// `v(t, x)` projected to the flux dimension.
    pub fn drift_at(&self, t: f64, x: Point) -> Point {
        self.project(self.drift.eval(t, x))
    }

    /// `G'(u)` projected to the flux dimension.
    pub fn state_speed(&self, u: f64) -> Point {
        self.project(self.nonlinearity.derivative(u))
    }

    /// Lipschitz modulus of `∂_u f` in `(t, x)` over the box of `grid`
    /// (analytic for built-in profiles, sampled for tables).
    pub fn lipschitz(&self, grid: &Grid) -> f64 {
        self.drift.lipschitz(grid)
    }

    /// Upper bound of `|∂_u f|` over the box of `grid` and `u ∈ [lo, hi]`.
    pub fn max_speed(&self, grid: &Grid, lo: f64, hi: f64) -> f64 {
        self.drift.sup_norm(grid) + self.nonlinearity.derivative_bound(lo, hi)
    }

    /// Whether `f(t, x, 0) = 0`; holds for every family since `G(0) = 0`.
    pub fn satisfies_f4(&self) -> bool {
        let g = self.nonlinearity.value(0.0);
        g[0] == 0.0 && g[1] == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burgers_speed_is_state() {
        let f = FluxModel::burgers(1).unwrap();
        assert_eq!(f.speed(0.0, [0.3, 0.0], 0.7), [0.7, 0.0]);
        assert_eq!(f.flux(0.0, [0.3, 0.0], 2.0), [2.0, 0.0]);
        assert_eq!(f.name(), "burgers");
        let grid = Grid::line(-1.0, 1.0, 16).unwrap();
        assert_eq!(f.lipschitz(&grid), 0.0);
        assert_eq!(f.max_speed(&grid, -2.0, 1.0), 2.0);
    }

    #[test]
    fn tanh_bound_hits_zero() {
        let g = Nonlinearity::Tanh { c: 0.5, direction: [1.0, 0.0] };
        assert_eq!(g.derivative_bound(-1.0, 2.0), 0.5);
        assert!(g.derivative_bound(1.0, 2.0) < 0.5);
    }

    #[test]
    fn rejects_planar_family_in_1d() {
        assert!(FluxModel::new(1, Drift::Rotation { omega: 1.0 }, Nonlinearity::Zero).is_err());
        assert!(FluxModel::new(3, Drift::Zero, Nonlinearity::Zero).is_err());
    }

    #[test]
    fn radial_constant_profile_bounds() {
        let drift = Drift::Radial {
            psi: RadialProfile::Constant { value: -2.0 },
            control: ControlPath::Rotating { radius: 1.0, omega: 0.0 },
        };
        let grid = Grid::square(-1.0, 1.0, 8).unwrap();
        let f = FluxModel::new(2, drift, Nonlinearity::Zero).unwrap();
        assert_eq!(f.lipschitz(&grid), 2.0);
        assert!((f.max_speed(&grid, 0.0, 1.0) - 2.0 * (2f64.sqrt() + 1.0)).abs() < 1e-12);
    }
}
