//! Uniform rasters, closed sets as cell masks, and the metric primitives built
//! on them.
//!
//! A [`GridSet`] is the closed set of the centers of its member cells. All
//! distances are measured between cell centers with the exact Euclidean
//! distance transform, so `dilate(A, r)` is the set of cells whose center lies
//! within `r` of a member center. Ties at exactly `r` count as inside.

use serde::{Deserialize, Serialize};

use crate::edt::squared_distance;
use crate::{Error, Point, Result};

/// Relative slack used when comparing a distance against a radius.
const TIE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    origin: Point,
    spacing: f64,
    extents: [usize; 2],
}

impl Grid {
    /// `extents[1]` is ignored (set to 1) for one-dimensional grids.
    pub fn new(dim: usize, origin: Point, spacing: f64, extents: [usize; 2]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} is not 1 or 2")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {spacing} must be positive")));
        }
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        let extents = if dim == 1 { [extents[0], 1] } else { extents };
        if extents[..dim].iter().any(|&n| n < 2) {
            return Err(Error::InvalidGrid(format!(
                "extents {:?} need at least 2 cells per axis",
                &extents[..dim]
            )));
        }
        let origin = if dim == 1 { [origin[0], 0.0] } else { origin };
        Ok(Self { dim, origin, spacing, extents })
    }

    /// `cells` uniform cells covering `[lo, hi]`.
    pub fn line(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(hi > lo) || cells == 0 {
            return Err(Error::InvalidGrid(format!("empty interval [{lo}, {hi}]")));
        }
        Self::new(1, [lo, 0.0], (hi - lo) / cells as f64, [cells, 1])
    }

    /// `cells × cells` uniform cells covering `[lo, hi]²`.
    pub fn square(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(hi > lo) || cells == 0 {
            return Err(Error::InvalidGrid(format!("empty square [{lo}, {hi}]²")));
        }
        Self::new(2, [lo, lo], (hi - lo) / cells as f64, [cells, cells])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extents(&self) -> [usize; 2] {
        self.extents
    }

    /// Far corner of the covered box.
    pub fn upper(&self) -> Point {
        [
            self.origin[0] + self.spacing * self.extents[0] as f64,
            self.origin[1] + self.spacing * self.extents[1] as f64,
        ]
    }

    pub fn len(&self) -> usize {
        self.extents[0] * self.extents[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub(crate) fn shape(&self) -> Vec<usize> {
        self.extents[..self.dim].to_vec()
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.extents[0] + ix
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.extents[0], index / self.extents[0])
    }

    pub fn center(&self, index: usize) -> Point {
        let (ix, iy) = self.coords(index);
        let x = self.origin[0] + (ix as f64 + 0.5) * self.spacing;
        if self.dim == 1 {
            [x, 0.0]
        } else {
            [x, self.origin[1] + (iy as f64 + 0.5) * self.spacing]
        }
    }

    /// Cell whose center is nearest to `p`, if `p` lies inside the covered box.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let axis = |a: usize| -> Option<usize> {
            let s = (p[a] - self.origin[a]) / self.spacing;
            if s < 0.0 || s > self.extents[a] as f64 {
                return None;
            }
            Some((s.floor() as usize).min(self.extents[a] - 1))
        };
        let ix = axis(0)?;
        let iy = if self.dim == 1 { 0 } else { axis(1)? };
        Some(self.index(ix, iy))
    }

    /// Fractional cell coordinates of `p` (cell centers sit at integers).
    #[allow(dead_code)]
    pub(crate) fn fractional(&self, p: Point) -> [f64; 2] {
        [
            (p[0] - self.origin[0]) / self.spacing - 0.5,
            if self.dim == 1 {
                0.0
            } else {
                (p[1] - self.origin[1]) / self.spacing - 0.5
            },
        ]
    }

    /// 4-neighbourhood (2-neighbourhood in 1D) of a cell.
    pub(crate) fn neighbours(&self, index: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        let (ix, iy) = self.coords(index);
        let [nx, ny] = self.extents;
        let dirs: &[(i64, i64)] = if self.dim == 1 {
            &[(-1, 0), (1, 0)]
        } else {
            &[(-1, 0), (1, 0), (0, -1), (0, 1)]
        };
        dirs.iter().map(move |&(dx, dy)| {
            let jx = ix as i64 + dx;
            let jy = iy as i64 + dy;
            if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                None
            } else {
                Some(self.index(jx as usize, jy as usize))
            }
        })
    }
}

/// Real values per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    grid: Grid,
    values: Vec<f64>,
}

impl Raster {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "raster has {} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("raster values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Closed set of cell centers, optionally carrying a signed distance per cell
/// (negative inside).
#[derive(Clone, Debug, PartialEq)]
pub struct GridSet {
    grid: Grid,
    mask: Vec<bool>,
    sdf: Option<Vec<f64>>,
}

impl GridSet {
    pub fn new(grid: Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "mask has {} entries for {} cells",
                mask.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, mask, sdf: None })
    }

    pub fn empty(grid: Grid) -> Self {
        let mask = vec![false; grid.len()];
        Self { grid, mask, sdf: None }
    }

    pub fn full(grid: Grid) -> Self {
        let mask = vec![true; grid.len()];
        Self { grid, mask, sdf: None }
    }

    pub fn from_predicate(grid: Grid, f: impl Fn(Point) -> bool) -> Self {
        let mask = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self { grid, mask, sdf: None }
    }

    /// Cells whose centers lie in the closed ball `B(center, radius)`.
    pub fn ball(grid: Grid, center: Point, radius: f64) -> Self {
        let slack = TIE * grid.spacing();
        Self::from_predicate(grid, |p| dist(p, center) <= radius + slack)
    }

    /// The cell nearest to `p`.
    pub fn singleton(grid: Grid, p: Point) -> Result<Self> {
        let cell = grid.locate(p).ok_or_else(|| {
            Error::InvalidArgument(format!("point {p:?} lies outside the grid"))
        })?;
        let mut set = Self::empty(grid);
        set.mask[cell] = true;
        Ok(set)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn sdf(&self) -> Option<&[f64]> {
        self.sdf.as_deref()
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.mask[cell]
    }

    pub fn insert(&mut self, cell: usize) {
        self.mask[cell] = true;
        self.sdf = None;
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn complement(&self) -> Self {
        let mask = self.mask.iter().map(|m| !m).collect();
        Self { grid: self.grid.clone(), mask, sdf: None }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        let mask = self
            .mask
            .iter()
            .zip(&other.mask)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Self { grid: self.grid.clone(), mask, sdf: None })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn is_subset(&self, other: &Self) -> Result<bool> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b))
    }

    /// Attach the signed distance: `d_A` outside, `-d_{Aᶜ}` inside, where
    /// everything beyond the grid counts as outside.
    pub fn with_signed_distance(mut self) -> Self {
        let outside = center_distances(&self.grid, &self.mask);
        let inside = distance_to_complement(&self);
        let sdf = self
            .mask
            .iter()
            .enumerate()
            .map(|(i, &m)| if m { -inside[i] } else { outside[i] })
            .collect();
        self.sdf = Some(sdf);
        self
    }

    /// Member cells with a 4-neighbour outside the set or on the grid edge.
    pub fn boundary_cells(&self) -> Vec<usize> {
        self.cells()
            .filter(|&i| {
                self.grid
                    .neighbours(i)
                    .any(|n| n.map_or(true, |j| !self.mask[j]))
            })
            .collect()
    }

    /// Largest center-to-center distance between members (0 for empty sets).
    pub fn diameter(&self) -> f64 {
        let rim: Vec<Point> = self
            .boundary_cells()
            .into_iter()
            .map(|i| self.grid.center(i))
            .collect();
        let mut best: f64 = 0.0;
        for (k, p) in rim.iter().enumerate() {
            for q in &rim[k + 1..] {
                best = best.max(dist(*p, *q));
            }
        }
        best
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Physical distance from each cell center to the nearest masked center.
pub(crate) fn center_distances(grid: &Grid, mask: &[bool]) -> Vec<f64> {
    let h = grid.spacing();
    squared_distance(mask, &grid.shape())
        .into_iter()
        .map(|d2| d2.sqrt() * h)
        .collect()
}

/// Distance from each cell to the nearest non-member, where a one-cell ring
/// beyond the grid counts as non-member.
pub(crate) fn distance_to_complement(set: &GridSet) -> Vec<f64> {
    let grid = &set.grid;
    let [nx, ny] = grid.extents();
    let padded: Vec<usize> = if grid.dim() == 1 { vec![nx + 2] } else { vec![nx + 2, ny + 2] };
    let (px, py) = (padded[0], if grid.dim() == 1 { 1 } else { padded[1] });
    let mut sites = vec![true; px * py];
    for iy in 0..ny {
        for ix in 0..nx {
            let (qx, qy) = if grid.dim() == 1 { (ix + 1, 0) } else { (ix + 1, iy + 1) };
            sites[qy * px + qx] = !set.mask[grid.index(ix, iy)];
        }
    }
    let d2 = squared_distance(&sites, &padded);
    let h = grid.spacing();
    (0..grid.len())
        .map(|i| {
            let (ix, iy) = grid.coords(i);
            let (qx, qy) = if grid.dim() == 1 { (ix + 1, 0) } else { (ix + 1, iy + 1) };
            d2[qy * px + qx].sqrt() * h
        })
        .collect()
}

/// `d_A` at every cell center.
pub fn distance_field(set: &GridSet) -> Result<Raster> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(Raster {
        grid: set.grid.clone(),
        values: center_distances(&set.grid, &set.mask),
    })
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("radius {r} must be finite and non-negative")))
    }
}

/// `B(A, r) = {x : d_A(x) ≤ r}`. Dilating the empty set gives the empty set.
pub fn dilate(set: &GridSet, r: f64) -> Result<GridSet> {
    check_radius(r)?;
    if set.is_empty() {
        return Ok(GridSet::empty(set.grid.clone()));
    }
    let limit = r + TIE * set.grid.spacing();
    let mask = center_distances(&set.grid, &set.mask)
        .into_iter()
        .map(|d| d <= limit)
        .collect();
    Ok(GridSet { grid: set.grid.clone(), mask, sdf: None })
}

/// Complement of `dilate(complement(A), r)`; the region beyond the grid is
/// part of the complement.
pub fn erode(set: &GridSet, r: f64) -> Result<GridSet> {
    check_radius(r)?;
    let limit = r + TIE * set.grid.spacing();
    let depth = distance_to_complement(set);
    let mask = set
        .mask
        .iter()
        .zip(depth)
        .map(|(&m, d)| m && d > limit)
        .collect();
    Ok(GridSet { grid: set.grid.clone(), mask, sdf: None })
}

/// Whether `A` equals `B(erode(A, r), r)` up to Hausdorff distance `tol`.
pub fn is_tubular(set: &GridSet, r: f64, tol: f64) -> Result<bool> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    if set.is_empty() {
        return Ok(false);
    }
    let core = erode(set, r)?;
    if core.is_empty() {
        return Ok(false);
    }
    let opened = dilate(&core, r)?;
    Ok(hausdorff_distance(&opened, set)? <= tol)
}

/// Largest distance from a member of `from` to the set `to`.
pub fn directed_hausdorff(from: &GridSet, to: &GridSet) -> Result<f64> {
    same_grid(&from.grid, &to.grid)?;
    if from.is_empty() {
        return Err(Error::EmptySet);
    }
    let field = distance_field(to)?;
    Ok(from.cells().map(|i| field.values[i]).fold(0.0, f64::max))
}

pub fn hausdorff_distance(a: &GridSet, b: &GridSet) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// Lebesgue measure: member count times cell volume.
pub fn measure(set: &GridSet) -> f64 {
    set.count() as f64 * set.grid.cell_volume()
}

pub fn sym_diff_measure(a: &GridSet, b: &GridSet) -> Result<f64> {
    same_grid(&a.grid, &b.grid)?;
    let cells = a.mask.iter().zip(&b.mask).filter(|(x, y)| x != y).count();
    Ok(cells as f64 * a.grid.cell_volume())
}

/// Upper bound `n·ω_n·((diam A)ⁿ + (diam A')ⁿ)/2ⁿ · ln(1 + d_H(A, A')/r)` on the
/// symmetric difference of two tubular neighbourhoods of radius `r`.
pub fn sym_diff_bound(a: &GridSet, b: &GridSet, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    let dh = hausdorff_distance(a, b)?;
    let n = a.grid.dim() as i32;
    let unit_ball = if n == 1 { 2.0 } else { std::f64::consts::PI };
    let diam = a.diameter().powi(n) + b.diameter().powi(n);
    Ok(n as f64 * unit_ball * diam / 2f64.powi(n) * (dh / r).ln_1p())
}

/// Outer Minkowski content estimate and the quotients it was fitted from.
#[derive(Clone, Debug, Serialize)]
pub struct MinkowskiEstimate {
    /// Intercept of the least-squares line `q(r) = content + slope·r`.
    pub content: f64,
    pub slope: f64,
    /// `(r, q(r))` with `q(r) = |B(A, r) \ A| / r`.
    pub table: Vec<(f64, f64)>,
}

pub fn minkowski_content(set: &GridSet, radii: &[f64]) -> Result<MinkowskiEstimate> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii given".into()));
    }
    let min = 2.0 * set.grid.spacing();
    let base = measure(set);
    let mut table = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > min) {
            return Err(Error::BelowResolution { radius: r, min });
        }
        let grown = measure(&dilate(set, r)?);
        table.push((r, (grown - base) / r));
    }
    let n = table.len() as f64;
    let mean_r = table.iter().map(|t| t.0).sum::<f64>() / n;
    let mean_q = table.iter().map(|t| t.1).sum::<f64>() / n;
    let sxx: f64 = table.iter().map(|t| (t.0 - mean_r).powi(2)).sum();
    let sxy: f64 = table.iter().map(|t| (t.0 - mean_r) * (t.1 - mean_q)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok(MinkowskiEstimate {
        content: mean_q - slope * mean_r,
        slope,
        table,
    })
}

/// Closure (one-cell dilation) of `{|u| > tol}`.
pub fn support_of_field(u: &Raster, tol: f64) -> Result<GridSet> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be non-negative")));
    }
    let core = GridSet {
        grid: u.grid.clone(),
        mask: u.values.iter().map(|v| v.abs() > tol).collect(),
        sdf: None,
    };
    dilate(&core, u.grid.spacing())
}
