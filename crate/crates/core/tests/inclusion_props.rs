use funnel_core::geometry::{dilate, dist, measure, Grid, GridSet};
use funnel_core::inclusion::{
    envelope_constant, propagate, propagate_funnel, Direction, Drift, FluxInclusion, FluxModel, Inclusion,
    Nonlinearity,
};
use funnel_core::Point;
use proptest::prelude::*;

fn swirl() -> FluxModel {
    FluxModel::new(2, Drift::Rotation { omega: 1.0 }, Nonlinearity::Quadratic { direction: [0.6, 0.2] }).unwrap()
}

fn plane(cells: usize) -> Grid {
    Grid::square(-1.5, 1.5, cells).unwrap()
}

fn centers(set: &GridSet) -> Vec<Point> {
    set.cells().map(|c| set.grid().center(c)).collect()
}

// brute-force Hausdorff between cell-center clouds, valid across grids
fn cloud_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let directed = |p: &[Point], q: &[Point]| {
        p.iter()
            .map(|x| q.iter().map(|y| dist(*x, *y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

fn blob(grid: &Grid, c: (f64, f64), r: f64) -> GridSet {
    GridSet::ball(grid.clone(), [c.0, c.1], r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn forward_slices_are_monotone_in_the_initial_set(
        c in (-0.4..0.4f64, -0.4..0.4f64),
        r in 0.15..0.3f64,
        extra in (-0.5..0.5f64, -0.5..0.5f64),
    ) {
        let grid = plane(40);
        let flux = swirl();
        let env = envelope_constant(-0.5, 0.8).unwrap();
        let small = blob(&grid, c, r);
        let big = small.union(&blob(&grid, extra, 0.2)).unwrap();
        let dt = 0.9 * grid.spacing() / FluxInclusion::new(&flux, &env).max_speed(&grid, 0.0, 0.4).unwrap();
        let a = propagate_funnel(&flux, &small, &env, 0.0, 0.4, dt, Direction::Forward).unwrap();
        let b = propagate_funnel(&flux, &big, &env, 0.0, 0.4, dt, Direction::Forward).unwrap();
        for (s, t) in a.slices().iter().zip(b.slices()) {
            prop_assert!(s.is_subset(t).unwrap());
        }
    }

    #[test]
    fn forward_slices_stay_in_the_speed_ball(
        c in (-0.4..0.4f64, -0.4..0.4f64),
        r in 0.05..0.3f64,
        lo in -1.0..0.0f64,
        hi in 0.0..1.0f64,
    ) {
        let grid = plane(40);
        let h = grid.spacing();
        let flux = swirl();
        let env = envelope_constant(lo, hi).unwrap();
        let k = blob(&grid, c, r);
        prop_assume!(!k.is_empty());
        let cmax = FluxInclusion::new(&flux, &env).max_speed(&grid, 0.0, 0.5).unwrap();
        let f = propagate_funnel(&flux, &k, &env, 0.0, 0.5, 0.9 * h / cmax, Direction::Forward).unwrap();
        for (t, s) in f.times().iter().zip(f.slices()) {
            let ball = dilate(&k, cmax * t + h).unwrap();
            prop_assert!(s.is_subset(&ball).unwrap());
        }
    }

    #[test]
    fn backward_and_forward_singletons_are_dual(
        y in (-0.3..0.3f64, -0.3..0.3f64),
        pick in 0usize..10_000,
    ) {
        let grid = plane(40);
        let h = grid.spacing();
        let flux = swirl();
        let env = envelope_constant(-0.5, 0.8).unwrap();
        let (tau0, tau) = (0.0, 0.5);
        let dt = 0.9 * h / FluxInclusion::new(&flux, &env).max_speed(&grid, tau0, tau).unwrap();
        let near = |set: &GridSet, p: Point| centers(set).iter().any(|q| dist(*q, p) <= 2.0 * h * (1.0 + 1e-9));

        // x ∈ Ω⁻(y) ⇒ y ∈ Ω⁺(x)
        let ky = GridSet::singleton(grid.clone(), [y.0, y.1]).unwrap();
        let yc = centers(&ky)[0];
        let back = propagate_funnel(&flux, &ky, &env, tau0, tau, dt, Direction::Backward).unwrap();
        let members = centers(back.first());
        let xc = members[pick % members.len()];
        let kx = GridSet::singleton(grid.clone(), xc).unwrap();
        let fwd = propagate_funnel(&flux, &kx, &env, tau0, tau, dt, Direction::Forward).unwrap();
        prop_assert!(near(fwd.last(), yc));

        // z ∈ Ω⁺(y) ⇒ y ∈ Ω⁻(z)
        let fwd_y = propagate_funnel(&flux, &ky, &env, tau0, tau, dt, Direction::Forward).unwrap();
        let members = centers(fwd_y.last());
        let zc = members[pick % members.len()];
        let kz = GridSet::singleton(grid.clone(), zc).unwrap();
        let back_z = propagate_funnel(&flux, &kz, &env, tau0, tau, dt, Direction::Backward).unwrap();
        prop_assert!(near(back_z.first(), yc));
    }
}

#[test]
fn refinement_moves_slices_by_order_spacing() {
    let flux = swirl();
    let env = envelope_constant(-0.5, 0.8).unwrap();
    let mut finals = Vec::new();
    let mut spacing = Vec::new();
    for cells in [30, 60, 120] {
        let grid = plane(cells);
        let h = grid.spacing();
        let k = blob(&grid, (0.3, -0.2), 0.3);
        let dt = 0.9 * h / FluxInclusion::new(&flux, &env).max_speed(&grid, 0.0, 0.6).unwrap();
        let f = propagate_funnel(&flux, &k, &env, 0.0, 0.6, dt, Direction::Forward).unwrap();
        finals.push(centers(f.last()));
        spacing.push(h);
    }
    for k in 0..2 {
        let d = cloud_hausdorff(&finals[k], &finals[k + 1]);
        assert!(d <= 3.0 * spacing[k], "level {k}: {d} vs spacing {}", spacing[k]);
    }
}

#[test]
fn rotation_preserves_volume() {
    let flux = FluxModel::new(2, Drift::Rotation { omega: 1.0 }, Nonlinearity::Zero).unwrap();
    let env = envelope_constant(0.0, 1.0).unwrap();
    let grid = plane(120);
    let h = grid.spacing();
    let k = blob(&grid, (0.5, 0.1), 0.4);
    let inc = FluxInclusion::new(&flux, &env);
    let dt = 0.9 * h / inc.max_speed(&grid, 0.0, 1.0).unwrap();
    let f = propagate(&inc, &k, 0.0, 1.0, dt, Direction::Forward).unwrap();
    let v0 = measure(&k);
    for s in f.slices() {
        assert!((measure(s) - v0).abs() <= 0.02 * v0, "{} vs {v0}", measure(s));
    }
}
