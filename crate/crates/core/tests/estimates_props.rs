use funnel_core::conservation::{Field, SchemeConfig};
use funnel_core::estimates::{contraction_check, domain_of_dependence, kruzkov_ball, perturbation_test, FunnelConfig};
use funnel_core::geometry::{Grid, GridSet};
use funnel_core::inclusion::{Drift, FluxModel, Nonlinearity};
use proptest::prelude::*;

fn sine_burgers() -> FluxModel {
    FluxModel::new(1, Drift::Sine { amplitude: 0.3, wavenumber: 2.0 }, Nonlinearity::Quadratic { direction: [1.0, 0.0] })
        .unwrap()
}

fn smooth_bumps(grid: &Grid, amps: &[f64]) -> Field {
    Field::from_fn(grid.clone(), |p| {
        amps.iter()
            .enumerate()
            .map(|(k, a)| {
                let c = -1.0 + 2.0 * k as f64 / amps.len() as f64;
                a * (-((p[0] - c) / 0.25).powi(2)).exp() * (p[0].abs() < 1.5) as i32 as f64
            })
            .sum()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn contraction_holds_on_random_pairs(
        a in prop::collection::vec(-1.0..1.0f64, 3..6),
        b in prop::collection::vec(-1.0..1.0f64, 3..6),
        centre in -0.5..0.5f64,
        heterogeneous in any::<bool>(),
    ) {
        let grid = Grid::line(-4.0, 4.0, 256).unwrap();
        let h = grid.spacing();
        let flux = if heterogeneous { sine_burgers() } else { FluxModel::burgers(1).unwrap() };
        let k = GridSet::from_predicate(grid.clone(), |p| (p[0] - centre).abs() <= 0.4);
        let r = contraction_check(
            &flux,
            &smooth_bumps(&grid, &a),
            &smooth_bumps(&grid, &b),
            &k,
            0.0,
            0.5,
            &SchemeConfig::default(),
            &FunnelConfig::default(),
        )
        .unwrap();
        prop_assert!(r.slack >= -2.0 * h, "{r:?}");
    }

    #[test]
    fn tighter_envelopes_give_smaller_estimates(
        a0 in -1.0..0.0f64,
        b0 in 0.0..1.0f64,
        widen in 0.0..0.5f64,
        x in -0.5..0.5f64,
    ) {
        let grid = Grid::line(-3.0, 3.0, 240).unwrap();
        let flux = sine_burgers();
        let cfg = FunnelConfig { dt: Some(0.004), ..FunnelConfig::default() };
        let tight = domain_of_dependence(&flux, &grid, a0, b0, [x, 0.0], 0.8, &cfg).unwrap();
        let loose = domain_of_dependence(&flux, &grid, a0 - widen, b0 + widen, [x, 0.0], 0.8, &cfg).unwrap();
        prop_assert!(tight.set.is_subset(&loose.set).unwrap());
    }

    #[test]
    fn estimates_stay_in_kruzkov_balls(
        a0 in -1.0..0.0f64,
        b0 in 0.0..1.0f64,
        x in -0.5..0.5f64,
        t in 0.2..1.0f64,
    ) {
        let grid = Grid::line(-3.0, 3.0, 240).unwrap();
        let flux = sine_burgers();
        let est = domain_of_dependence(&flux, &grid, a0, b0, [x, 0.0], t, &FunnelConfig::default()).unwrap();
        let ball = kruzkov_ball(&grid, est.point, est.cmax * t);
        prop_assert!(est.set.is_subset(&ball).unwrap());
    }
}

#[test]
fn farther_perturbations_matter_less() {
    let grid = Grid::line(-3.0, 5.0, 400).unwrap();
    let flux = FluxModel::burgers(1).unwrap();
    let u0 = Field::from_fn(grid.clone(), |p| 0.5 * (-(p[0] / 0.5).powi(2)).exp()).unwrap();
    let x = [0.3, 0.0];
    let mut diffs = Vec::new();
    for offset in [0.25, 0.35, 0.45] {
        let w = Field::from_fn(grid.clone(), |p| if (p[0] - (x[0] + offset + 0.2)).abs() <= 0.2 { 1.0 } else { 0.0 })
            .unwrap();
        let r = perturbation_test(&flux, &u0, &w, x, 0.5, 0.1, 0.05, &SchemeConfig::default(), &FunnelConfig::default())
            .unwrap();
        diffs.push(r.difference);
    }
    assert!(diffs.windows(2).all(|w| w[1] <= w[0]), "{diffs:?}");
}
