use funnel_core::conservation::{solve, Field, SchemeConfig};
use funnel_core::geometry::{Grid, GridSet, Raster};
use funnel_core::inclusion::{propagate, ConstantInclusion, Direction, FluxModel, VelocitySet};
use funnel_core::io::{decode, encode_mask, encode_raster, read_funnel, read_trajectory, write_funnel, write_trajectory, RasterFile};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (1usize..=2, 2usize..20, 2usize..20, -5.0..5.0f64, -5.0..5.0f64, 0.01..1.0f64)
        .prop_map(|(dim, nx, ny, ox, oy, h)| Grid::new(dim, [ox, oy], h, [nx, ny]).unwrap())
}

proptest! {
    #[test]
    fn rasters_and_masks_survive_encoding(grid in grid_strategy(), seed in any::<u64>()) {
        let n = grid.len();
        let values: Vec<f64> = (0..n).map(|i| ((i as u64 ^ seed) % 1000) as f64 * 1e-3 - 0.5).collect();
        let raster = Raster::new(grid.clone(), values).unwrap();
        match decode(&encode_raster(&raster)).unwrap() {
            RasterFile::Values(r) => prop_assert_eq!(r, raster),
            RasterFile::Mask(_) => prop_assert!(false, "decoded a value raster as a mask"),
        }
        let mask: Vec<bool> = (0..n).map(|i| (i as u64).wrapping_mul(seed | 1) % 3 == 0).collect();
        let set = GridSet::new(grid, mask).unwrap();
        match decode(&encode_mask(&set)).unwrap() {
            RasterFile::Mask(s) => prop_assert_eq!(s.mask(), set.mask()),
            RasterFile::Values(_) => prop_assert!(false, "decoded a mask as values"),
        }
    }
}

#[test]
fn funnel_and_trajectory_directories_round_trip() {
    let dir = std::env::temp_dir().join(format!("funnel-io-{}", std::process::id()));
    let grid = Grid::square(-1.0, 1.0, 24).unwrap();
    let k = GridSet::ball(grid.clone(), [0.0, 0.0], 0.2);
    let inc = ConstantInclusion(VelocitySet::disk([0.0, 0.0], 1.0, 16));
    let funnel = propagate(&inc, &k, 0.0, 0.3, 0.05, Direction::Backward).unwrap();
    let index = write_funnel(dir.join("funnel"), &funnel).unwrap();
    assert_eq!(index.files.len(), funnel.len());
    let back = read_funnel(dir.join("funnel")).unwrap();
    assert_eq!(back.direction(), Direction::Backward);
    assert_eq!(back.times(), funnel.times());
    assert!(back.slices().iter().zip(funnel.slices()).all(|(a, b)| a.mask() == b.mask()));

    let line = Grid::line(-2.0, 3.0, 100).unwrap();
    let u0 = Field::from_fn(line, |p| if p[0].abs() < 0.5 { 1.0 } else { 0.0 }).unwrap();
    let traj = solve(&FluxModel::burgers(1).unwrap(), &u0, 0.5, &SchemeConfig { snapshots: 4, ..Default::default() })
        .unwrap();
    write_trajectory(dir.join("traj"), &traj).unwrap();
    let (index, fields) = read_trajectory(dir.join("traj")).unwrap();
    assert_eq!(index.flux, "burgers");
    assert_eq!(fields, traj.fields);
    std::fs::remove_dir_all(&dir).unwrap();
}
