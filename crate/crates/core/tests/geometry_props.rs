use funnel_core::geometry::{
    dilate, hausdorff_distance, is_tubular, minkowski_content, sym_diff_bound, sym_diff_measure, Grid, GridSet,
};
use proptest::prelude::*;

fn plane() -> Grid {
    Grid::square(-1.0, 1.0, 48).unwrap()
}

fn disks(grid: &Grid, disks: &[(f64, f64, f64)]) -> GridSet {
    GridSet::from_predicate(grid.clone(), |p| {
        disks.iter().any(|&(x, y, r)| (p[0] - x).hypot(p[1] - y) <= r)
    })
}

fn disk_list(max: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-0.6..0.6f64, -0.6..0.6f64, 0.02..0.3f64), 1..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dilation_is_monotone(a in disk_list(3), extra in disk_list(2), r in 0.0..0.5f64) {
        let grid = plane();
        let small = disks(&grid, &a);
        let big = small.union(&disks(&grid, &extra)).unwrap();
        prop_assume!(!small.is_empty());
        prop_assert!(dilate(&small, r).unwrap().is_subset(&dilate(&big, r).unwrap()).unwrap());
    }

    #[test]
    fn dilation_semigroup_within_a_cell(a in disk_list(3), r in 0.0..0.3f64, s in 0.0..0.3f64) {
        let grid = plane();
        let h = grid.spacing();
        let set = disks(&grid, &a);
        prop_assume!(!set.is_empty());
        let twice = dilate(&dilate(&set, r).unwrap(), s).unwrap();
        let once = dilate(&set, r + s).unwrap();
        prop_assert!(twice.is_subset(&once).unwrap());
        // each dilation rounds inward by at most half a cell diagonal
        prop_assert!(hausdorff_distance(&twice, &once).unwrap() <= std::f64::consts::SQRT_2 * h * (1.0 + 1e-9));
    }

    #[test]
    fn hausdorff_triangle_inequality(a in disk_list(2), b in disk_list(2), c in disk_list(2)) {
        let grid = plane();
        let (a, b, c) = (disks(&grid, &a), disks(&grid, &b), disks(&grid, &c));
        prop_assume!(!a.is_empty() && !b.is_empty() && !c.is_empty());
        let ab = hausdorff_distance(&a, &b).unwrap();
        let bc = hausdorff_distance(&b, &c).unwrap();
        let ac = hausdorff_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert_eq!(ab, hausdorff_distance(&b, &a).unwrap());
    }

    #[test]
    fn tubular_pairs_obey_log_bound(
        p in prop::collection::vec((-0.5..0.5f64, -0.5..0.5f64), 1..4),
        q in prop::collection::vec((-0.5..0.5f64, -0.5..0.5f64), 1..4),
        r in 0.15..0.4f64,
    ) {
        let grid = plane();
        let h = grid.spacing();
        // cores snapped to cell centers so B(P, r) is exactly representable
        let snap = |pts: &[(f64, f64)]| -> GridSet {
            let mut core = GridSet::empty(grid.clone());
            for &(x, y) in pts {
                core.insert(grid.locate([x, y]).unwrap());
            }
            dilate(&core, r).unwrap()
        };
        let (a, b) = (snap(&p), snap(&q));
        prop_assert!(is_tubular(&a, r, 2.0 * h).unwrap());
        let lhs = sym_diff_measure(&a, &b).unwrap();
        let slack = std::f64::consts::PI * (a.diameter() + b.diameter()) * h;
        prop_assert!(lhs <= sym_diff_bound(&a, &b, r).unwrap() + slack);
    }
}

#[test]
fn minkowski_content_converges_to_perimeter() {
    let mut errors = Vec::new();
    let radii = [0.3, 0.25, 0.2, 0.15];
    for cells in [64, 128, 256, 512] {
        let grid = Grid::square(-2.0, 2.0, cells).unwrap();
        let disk = GridSet::ball(grid, [0.0, 0.0], 1.0);
        let est = minkowski_content(&disk, &radii).unwrap();
        errors.push((est.content - 2.0 * std::f64::consts::PI).abs() / (2.0 * std::f64::consts::PI));
    }
    assert!(errors[3] <= 0.05, "{errors:?}");
    assert!(errors[3] <= errors[0], "{errors:?}");
}
