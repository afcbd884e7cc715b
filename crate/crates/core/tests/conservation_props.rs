use funnel_core::conservation::{l1_distance, solve, total_mass, Field, SchemeConfig};
use funnel_core::geometry::{Grid, GridSet};
use funnel_core::inclusion::{Drift, FluxModel, Nonlinearity};
use proptest::prelude::*;

fn line() -> Grid {
    Grid::line(-3.0, 3.0, 240).unwrap()
}

fn sine_burgers() -> FluxModel {
    FluxModel::new(1, Drift::Sine { amplitude: 0.5, wavenumber: 2.0 }, Nonlinearity::Quadratic { direction: [1.0, 0.0] })
        .unwrap()
}

// piecewise constant on [-1, 1], zero elsewhere
fn pieces(grid: &Grid, values: &[f64]) -> Field {
    let n = values.len() as f64;
    Field::from_fn(grid.clone(), |p| {
        if p[0].abs() < 1.0 {
            values[(((p[0] + 1.0) / 2.0 * n) as usize).min(values.len() - 1)]
        } else {
            0.0
        }
    })
    .unwrap()
}

fn total_variation(u: &Field) -> f64 {
    u.values().windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 4..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn l1_distance_never_grows(a in values(), b in values(), heterogeneous in any::<bool>()) {
        let grid = line();
        let flux = if heterogeneous { sine_burgers() } else { FluxModel::burgers(1).unwrap() };
        let cfg = SchemeConfig { snapshots: 8, ..SchemeConfig::default() };
        let u = solve(&flux, &pieces(&grid, &a), 1.0, &cfg).unwrap();
        let v = solve(&flux, &pieces(&grid, &b), 1.0, &cfg).unwrap();
        let all = GridSet::full(grid);
        let d: Vec<f64> = u.fields.iter().zip(&v.fields).map(|(x, y)| l1_distance(x, y, &all).unwrap()).collect();
        for w in d.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{d:?}");
        }
    }

    #[test]
    fn mass_is_conserved(a in values(), heterogeneous in any::<bool>()) {
        let grid = line();
        let flux = if heterogeneous { sine_burgers() } else { FluxModel::burgers(1).unwrap() };
        let u0 = pieces(&grid, &a);
        let traj = solve(&flux, &u0, 1.0, &SchemeConfig::default()).unwrap();
        let m0 = total_mass(&u0);
        let scale = u0.values().iter().map(|v| v.abs()).sum::<f64>() * grid.spacing();
        for f in &traj.fields {
            prop_assert!((total_mass(f) - m0).abs() <= 1e-10 * scale.max(1e-300));
        }
    }

    #[test]
    fn ordered_data_stay_ordered(a in values(), bump in prop::collection::vec(0.0..0.5f64, 4..10)) {
        let grid = line();
        let flux = sine_burgers();
        let lower = pieces(&grid, &a);
        let upper_vals: Vec<f64> = a.iter().zip(bump.iter().cycle()).map(|(x, d)| x + d).collect();
        let upper = pieces(&grid, &upper_vals);
        prop_assume!(lower.values().iter().zip(upper.values()).all(|(x, y)| x <= y));
        // one step size for both runs
        let cfg = SchemeConfig { dt: Some(0.4 * grid.spacing() / 2.5), ..SchemeConfig::default() };
        let u = solve(&flux, &lower, 1.0, &cfg).unwrap();
        let v = solve(&flux, &upper, 1.0, &cfg).unwrap();
        for (x, y) in u.fields.iter().zip(&v.fields) {
            prop_assert!(x.values().iter().zip(y.values()).all(|(p, q)| *p <= q + 1e-12));
        }
    }

    #[test]
    fn total_variation_never_grows(a in values()) {
        let grid = line();
        let traj = solve(&FluxModel::burgers(1).unwrap(), &pieces(&grid, &a), 1.0, &SchemeConfig::default()).unwrap();
        let tv: Vec<f64> = traj.fields.iter().map(total_variation).collect();
        for w in tv.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{tv:?}");
        }
    }
}

fn riemann_error(cells: usize, left: f64, right: f64) -> f64 {
    let grid = Grid::line(-2.0, 3.0, cells).unwrap();
    let u0 = Field::from_fn(grid.clone(), |p| if p[0] < 0.0 { left } else { right }).unwrap();
    let cfg = SchemeConfig { snapshots: 1, overflow_tol: f64::INFINITY, ..SchemeConfig::default() };
    let u = solve(&FluxModel::burgers(1).unwrap(), &u0, 1.0, &cfg).unwrap();
    let exact = |x: f64| {
        if left > right {
            if x < 0.5 * (left + right) { left } else { right }
        } else {
            x.clamp(left, right)
        }
    };
    let h = grid.spacing();
    u.last().values().iter().enumerate().map(|(i, v)| (v - exact(grid.center(i)[0])).abs() * h).sum()
}

#[test]
fn riemann_errors_halve_with_spacing() {
    for (left, right) in [(1.0, 0.0), (0.0, 1.0)] {
        let errs: Vec<f64> = [256, 512, 1024].iter().map(|&n| riemann_error(n, left, right)).collect();
        for w in errs.windows(2) {
            let ratio = w[1] / w[0];
            assert!((0.35..=0.65).contains(&ratio), "{left}->{right}: {errs:?}");
        }
    }
}
