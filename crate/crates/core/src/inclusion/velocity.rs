use serde::Serialize;

use crate::{Error, Point, Result};

/// Convex compact set of admissible velocities: an interval in 1D, a convex
/// polygon (counter-clockwise vertices) in 2D.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VelocitySet {
    Interval { lo: f64, hi: f64 },
    Polygon { vertices: Vec<Point> },
}

impl VelocitySet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvertedBounds { lo, hi });
        }
        Ok(Self::Interval { lo, hi })
    }

    pub fn singleton(dim: usize, v: Point) -> Self {
        if dim == 1 {
            Self::Interval { lo: v[0], hi: v[0] }
        } else {
            Self::Polygon { vertices: vec![v] }
        }
    }

    /// Convex hull of `points`, for the given dimension. 1D uses `p[0]` only.
    pub fn hull(dim: usize, points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("hull of no points".into()));
        }
        if dim == 1 {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            return Ok(Self::Interval { lo, hi });
        }
        Ok(Self::Polygon { vertices: convex_hull(points) })
    }

    /// Polygon with `vertices` corners circumscribing the disk `B(center, radius)`.
    pub fn disk(center: Point, radius: f64, vertices: usize) -> Self {
        if radius <= 0.0 {
            return Self::Polygon { vertices: vec![center] };
        }
        let n = vertices.max(3);
        let outer = radius / (std::f64::consts::PI / n as f64).cos();
        let vertices = (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [center[0] + outer * a.cos(), center[1] + outer * a.sin()]
            })
            .collect();
        Self::Polygon { vertices }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Interval { .. } => 1,
            Self::Polygon { .. } => 2,
        }
    }

    pub fn vertices(&self) -> Vec<Point> {
        match self {
            Self::Interval { lo, hi } if lo == hi => vec![[*lo, 0.0]],
            Self::Interval { lo, hi } => vec![[*lo, 0.0], [*hi, 0.0]],
            Self::Polygon { vertices } => vertices.clone(),
        }
    }

    /// Support function `max { p·v : v ∈ F }`.
    pub fn support(&self, p: Point) -> f64 {
        match self {
            Self::Interval { lo, hi } => (p[0] * lo).max(p[0] * hi),
            Self::Polygon { vertices } => vertices
                .iter()
                .map(|v| p[0] * v[0] + p[1] * v[1])
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn translate(&self, d: Point) -> Self {
        match self {
            Self::Interval { lo, hi } => Self::Interval { lo: lo + d[0], hi: hi + d[0] },
            Self::Polygon { vertices } => Self::Polygon {
                vertices: vertices.iter().map(|v| [v[0] + d[0], v[1] + d[1]]).collect(),
            },
        }
    }

    /// `-F`; point reflection keeps the counter-clockwise order.
    pub fn negate(&self) -> Self {
        match self {
            Self::Interval { lo, hi } => Self::Interval { lo: -hi, hi: -lo },
            Self::Polygon { vertices } => Self::Polygon {
                vertices: vertices.iter().map(|v| [-v[0], -v[1]]).collect(),
            },
        }
    }

    /// Largest Euclidean norm over the set.
    pub fn max_norm(&self) -> f64 {
        match self {
            Self::Interval { lo, hi } => lo.abs().max(hi.abs()),
            Self::Polygon { vertices } => vertices.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounds(&self) -> (Point, Point) {
        match self {
            Self::Interval { lo, hi } => ([*lo, 0.0], [*hi, 0.0]),
            Self::Polygon { vertices } => vertices.iter().fold(
                ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
                |(lo, hi), v| ([lo[0].min(v[0]), lo[1].min(v[1])], [hi[0].max(v[0]), hi[1].max(v[1])]),
            ),
        }
    }

    /// Largest distance between two points of the set.
    pub fn diameter(&self) -> f64 {
        match self {
            Self::Interval { lo, hi } => hi - lo,
            Self::Polygon { vertices } => vertices
                .iter()
                .flat_map(|a| vertices.iter().map(move |b| (a[0] - b[0]).hypot(a[1] - b[1])))
                .fold(0.0, f64::max),
        }
    }

    /// Membership up to `tol`.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        match self {
            Self::Interval { lo, hi } => p[0] >= lo - tol && p[0] <= hi + tol,
            Self::Polygon { vertices } => match vertices.len() {
                1 => (p[0] - vertices[0][0]).hypot(p[1] - vertices[0][1]) <= tol,
                2 => segment_distance(p, vertices[0], vertices[1]) <= tol,
                n => (0..n).all(|k| {
                    let a = vertices[k];
                    let b = vertices[(k + 1) % n];
                    let edge = [b[0] - a[0], b[1] - a[1]];
                    let len = edge[0].hypot(edge[1]);
                    cross(edge, [p[0] - a[0], p[1] - a[1]]) >= -tol * len
                }),
            },
        }
    }

    /// Points on the boundary (vertices and edge subdivisions no longer than
    /// `max_piece`) plus the centroid. Used to minimise over the set.
    pub(crate) fn boundary_samples(&self, max_piece: f64) -> Vec<Point> {
        let verts = self.vertices();
        let mut out = Vec::with_capacity(verts.len() * 2 + 1);
        let n = verts.len();
        let closed = matches!(self, Self::Polygon { .. }) && n > 2;
        let edges = if closed { n } else { n.saturating_sub(1) };
        for k in 0..n {
            out.push(verts[k]);
        }
        for k in 0..edges {
            let a = verts[k];
            let b = verts[(k + 1) % n];
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let pieces = if max_piece > 0.0 { (len / max_piece).ceil() as usize } else { 1 };
            for j in 1..pieces {
                let s = j as f64 / pieces as f64;
                out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
            }
        }
        let c = verts.iter().fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        out.push([c[0] / n as f64, c[1] / n as f64]);
        out
    }
}

/// The Hamiltonian `H(p) = max_{v ∈ F} p·v`.
pub fn hamiltonian(set: &VelocitySet, p: Point) -> f64 {
    set.support(p)
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let s = if len2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - s * ab[0]).hypot(p[1] - a[1] - s * ab[1])
}

/// Andrew's monotone chain; collinear points are dropped.
fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let turn = |o: Point, a: Point, b: Point| cross([a[0] - o[0], a[1] - o[1]], [b[0] - o[0], b[1] - o[1]]);
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}
