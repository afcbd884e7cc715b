use serde::Serialize;

use super::funnel::{Direction, Funnel, Inclusion};
use crate::{Error, Result};

/// Radius (in cells) of the boundary patch fitted around each sample.
const PATCH: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualStats {
    pub count: usize,
    /// Samples whose fitted normal had no usable space part.
    pub degenerate: usize,
    pub median: f64,
    pub mean: f64,
    pub p90: f64,
    pub max: f64,
}

/// Hamiltonian residual `|θ + H(t, x, ζ)|` (forward) or `|−θ + H(t, x, −ζ)|`
/// (backward) on the lateral boundary of the funnel body.
///
/// The body is rasterised in space-time, one layer per stored slice, with the
/// time axis scaled so a layer has the width of a cell. At each lateral
/// boundary voxel the outward normal is the least-squares plane normal of the
/// boundary voxels within a small ball, which averages out the staircase of
/// the raster. Voxels within the patch radius of the initial or final slice,
/// or of the grid edge, are skipped.
pub fn proximal_residual<I: Inclusion + ?Sized>(funnel: &Funnel, inc: &I) -> Result<ResidualStats> {
    let m = funnel.len();
    if m < 3 {
        return Err(Error::Precondition(format!("funnel has {m} slices, need at least 3")));
    }
    let times = funnel.times();
    let dt = (times[m - 1] - times[0]) / (m - 1) as f64;
    let grid = funnel.grid();
    let h = grid.spacing();
    let dim = grid.dim();
    let [nx, ny] = grid.extents();
    let ny = if dim == 1 { 1 } else { ny };
    let plane = nx * ny;
    let body = |k: usize, ix: usize, iy: usize| funnel.slices()[k].contains(iy * nx + ix);

    // Lateral boundary: members with a non-member (or off-grid) spatial neighbour,
    // with the outward direction of those neighbours.
    let mut outward = vec![[0i32; 2]; plane * m];
    let mut lateral = vec![false; plane * m];
    for k in 0..m {
        for iy in 0..ny {
            for ix in 0..nx {
                if !body(k, ix, iy) {
                    continue;
                }
                let mut dir = [0i32; 2];
                let mut open = |dx: i32, dy: i32, x: Option<usize>, y: Option<usize>| match (x, y) {
                    (Some(x), Some(y)) if body(k, x, y) => {}
                    _ => {
                        dir[0] += dx;
                        dir[1] += dy;
                    }
                };
                open(-1, 0, ix.checked_sub(1), Some(iy));
                open(1, 0, (ix + 1 < nx).then_some(ix + 1), Some(iy));
                if dim == 2 {
                    open(0, -1, Some(ix), iy.checked_sub(1));
                    open(0, 1, Some(ix), (iy + 1 < ny).then_some(iy + 1));
                }
                let v = k * plane + iy * nx + ix;
                if dir != [0, 0] || (ix == 0 || ix + 1 == nx || (dim == 2 && (iy == 0 || iy + 1 == ny))) {
                    lateral[v] = true;
                    outward[v] = dir;
                }
            }
        }
    }

    let r = PATCH as i64;
    let mut residuals = Vec::new();
    let mut degenerate = 0;
    let (ylo, yhi) = if dim == 2 { (PATCH, ny.saturating_sub(PATCH)) } else { (0, 1) };
    for k in PATCH..m.saturating_sub(PATCH) {
        for iy in ylo..yhi {
            for ix in PATCH..nx.saturating_sub(PATCH) {
                let v = k * plane + iy * nx + ix;
                if !lateral[v] {
                    continue;
                }
                let mut pts: Vec<[f64; 3]> = Vec::new();
                let dy_range = if dim == 2 { -r..=r } else { 0..=0 };
                for dk in -r..=r {
                    for dy in dy_range.clone() {
                        for dx in -r..=r {
                            if dk * dk + dy * dy + dx * dx > r * r {
                                continue;
                            }
                            let w = (k as i64 + dk) as usize * plane
                                + (iy as i64 + dy) as usize * nx
                                + (ix as i64 + dx) as usize;
                            if lateral[w] {
                                pts.push([dx as f64, dy as f64, dk as f64]);
                            }
                        }
                    }
                }
                let Some(n) = plane_normal(&pts, dim) else {
                    degenerate += 1;
                    continue;
                };
                let (nx_, ny_, nt) = (n[0], n[1], n[2]);
                let space = nx_.hypot(ny_);
                if space < 1e-3 {
                    degenerate += 1;
                    continue;
                }
                let hint = outward[v];
                let sign = if nx_ * hint[0] as f64 + ny_ * hint[1] as f64 >= 0.0 { 1.0 } else { -1.0 };
                let zeta = [sign * nx_ / space, sign * ny_ / space];
                let theta = sign * nt * h / (dt * space);
                let t = times[k];
                let x = grid.center(iy * nx + ix);
                let set = inc.velocity_set(t, x)?;
                let res = match funnel.direction() {
                    Direction::Forward => theta + set.support(zeta),
                    Direction::Backward => -theta + set.support([-zeta[0], -zeta[1]]),
                };
                residuals.push(res.abs());
            }
        }
    }
    if residuals.is_empty() {
        return Err(Error::Precondition("funnel has no lateral boundary samples".into()));
    }
    residuals.sort_by(f64::total_cmp);
    let n = residuals.len();
    let quantile = |q: f64| residuals[((q * (n - 1) as f64).round() as usize).min(n - 1)];
    Ok(ResidualStats {
        count: n,
        degenerate,
        median: quantile(0.5),
        mean: residuals.iter().sum::<f64>() / n as f64,
        p90: quantile(0.9),
        max: residuals[n - 1],
    })
}

/// Unit normal `(n_x, n_y, n_t)` of the least-squares plane (line in 1D
/// space-time) through `pts`, given as `(x, y, t)` offsets.
fn plane_normal(pts: &[[f64; 3]], dim: usize) -> Option<[f64; 3]> {
    let axes: &[usize] = if dim == 1 { &[0, 2] } else { &[0, 1, 2] };
    if pts.len() < axes.len() + 1 {
        return None;
    }
    let n = pts.len() as f64;
    let mut mean = [0.0; 3];
    for p in pts {
        for a in 0..3 {
            mean[a] += p[a] / n;
        }
    }
    let d = axes.len();
    let mut cov = vec![vec![0.0; d]; d];
    for p in pts {
        for (i, &a) in axes.iter().enumerate() {
            for (j, &b) in axes.iter().enumerate() {
                cov[i][j] += (p[a] - mean[a]) * (p[b] - mean[b]);
            }
        }
    }
    let (values, vectors) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    // A patch that is not close to flat has no well-defined normal.
    if values[order[1]] <= 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (i, &a) in axes.iter().enumerate() {
        out[a] = vectors[i][order[0]];
    }
    Some(out)
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and eigenvectors as columns.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _ in 0..50 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::super::{propagate, ConstantInclusion, VelocitySet};
    use super::*;
    use crate::{Grid, GridSet};

    #[test]
    fn cone_residual_small() {
        let grid = Grid::square(-1.0, 1.0, 80).unwrap();
        let h = grid.spacing();
        let k = GridSet::singleton(grid.clone(), [0.0125, 0.0125]).unwrap();
        let inc = ConstantInclusion(VelocitySet::disk([0.0, 0.0], 1.0, 32));
        for dir in [Direction::Forward, Direction::Backward] {
            let f = propagate(&inc, &k, 0.0, 0.8, 0.9 * h, dir).unwrap();
            let stats = proximal_residual(&f, &inc).unwrap();
            assert!(stats.median <= 0.1, "{dir:?} {stats:?}");
        }
    }

    #[test]
    fn jacobi_recovers_plane() {
        let pts: Vec<[f64; 3]> = (0..5)
            .flat_map(|i| (0..5).map(move |j| [i as f64, j as f64, 0.5 * i as f64 - 0.25 * j as f64]))
            .collect();
        let n = plane_normal(&pts, 2).unwrap();
        let want = [0.5, -0.25, -1.0];
        let norm = (want[0] * want[0] + want[1] * want[1] + 1.0f64).sqrt();
        let dot = (n[0] * want[0] + n[1] * want[1] + n[2] * want[2]) / norm;
        assert!((dot.abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tube_residual_small() {
        let grid = Grid::line(-1.0, 2.0, 150).unwrap();
        let h = grid.spacing();
        let k = GridSet::from_predicate(grid.clone(), |p| p[0].abs() <= 0.3);
        let inc = ConstantInclusion(VelocitySet::interval(0.7, 0.7).unwrap());
        let f = propagate(&inc, &k, 0.0, 1.0, h, Direction::Forward).unwrap();
        let stats = proximal_residual(&f, &inc).unwrap();
        assert!(stats.median <= 0.1, "{stats:?}");
    }
}
