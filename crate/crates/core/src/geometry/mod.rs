//! Cross-section geometry: 2D domains with strict-interior containment,
//! uniform interior/boundary sampling, and midpoint quadrature.

mod points;

pub use points::{
    load_points, parse_domain_file, parse_domain_text, save_points, PointSet, Provenance,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numeric::pairwise_sum;

pub type Point2 = [f64; 2];

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("radius/side must be positive, got {0}")]
    NonPositiveSize(f64),
    #[error("rectangle corners are not ordered: min {min:?}, max {max:?}")]
    BadRectangle { min: Point2, max: Point2 },
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertices must be counterclockwise (signed area {0})")]
    NotCounterclockwise(f64),
    #[error("polygon is self-intersecting (edges {0} and {1} cross)")]
    SelfIntersecting(usize, usize),
    #[error("domain has zero area; cannot sample interior points")]
    DegenerateDomain,
    #[error("interior rejection sampling failed after {attempts} attempts")]
    SamplingFailed { attempts: usize },
    #[error("quadrature cell size {h} exceeds the domain extent {extent}")]
    CellTooLarge { h: f64, extent: f64 },
    #[error("cell size must be positive, got {0}")]
    NonPositiveCell(f64),
    #[error("{0}")]
    File(String),
    #[error("point {index} ({x}, {y}) fails {kind} validation against the domain")]
    PointOutsideDomain {
        index: usize,
        x: f64,
        y: f64,
        kind: &'static str,
    },
}

/// A 2D cross-section. All lengths in meters.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain2D {
    Circle {
        center: Point2,
        radius: f64,
    },
    Rectangle {
        min: Point2,
        max: Point2,
    },
    /// Equilateral triangle given by centroid, side length and the angle
    /// of the first vertex from the centroid.
    EquilateralTriangle {
        centroid: Point2,
        side: f64,
        orientation: f64,
    },
    /// Simple polygon, counterclockwise.
    Polygon {
        vertices: Vec<Point2>,
    },
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist(a: Point2, b: Point2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn shoelace(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    acc / 2.0
}

fn segments_properly_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len_sq = ab[0] * ab[0] + ab[1] * ab[1];
    if len_sq == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len_sq).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

impl Domain2D {
    pub fn circle(center: Point2, radius: f64) -> Result<Self, GeometryError> {
        if radius <= 0.0 {
            return Err(GeometryError::NonPositiveSize(radius));
        }
        Ok(Self::Circle { center, radius })
    }

    pub fn rectangle(min: Point2, max: Point2) -> Result<Self, GeometryError> {
        if min[0] >= max[0] || min[1] >= max[1] {
            return Err(GeometryError::BadRectangle { min, max });
        }
        Ok(Self::Rectangle { min, max })
    }

    pub fn equilateral_triangle(
        centroid: Point2,
        side: f64,
        orientation: f64,
    ) -> Result<Self, GeometryError> {
        if side <= 0.0 {
            return Err(GeometryError::NonPositiveSize(side));
        }
        Ok(Self::EquilateralTriangle {
            centroid,
            side,
            orientation,
        })
    }

    pub fn polygon(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let signed = shoelace(&vertices);
        if signed <= 0.0 {
            return Err(GeometryError::NotCounterclockwise(signed));
        }
        let n = vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                // Adjacent edges share a vertex; skip those pairs.
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                if segments_properly_intersect(
                    vertices[i],
                    vertices[(i + 1) % n],
                    vertices[j],
                    vertices[(j + 1) % n],
                ) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        Ok(Self::Polygon { vertices })
    }

    /// Vertices of the polygonal variants, counterclockwise. Empty for
    /// the circle.
    pub fn vertex_list(&self) -> Vec<Point2> {
        match self {
            Self::Circle { .. } => Vec::new(),
            Self::Rectangle { min, max } => vec![
                [min[0], min[1]],
                [max[0], min[1]],
                [max[0], max[1]],
                [min[0], max[1]],
            ],
            Self::EquilateralTriangle {
                centroid,
                side,
                orientation,
            } => {
                let circumradius = side / 3.0f64.sqrt();
                (0..3)
                    .map(|k| {
                        let angle = orientation + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                        [
                            centroid[0] + circumradius * angle.cos(),
                            centroid[1] + circumradius * angle.sin(),
                        ]
                    })
                    .collect()
            }
            Self::Polygon { vertices } => vertices.clone(),
        }
    }

    /// Strict interior test: boundary points are not contained.
    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Self::Circle { center, radius } => dist(p, *center) < *radius,
            Self::Rectangle { min, max } => {
                p[0] > min[0] && p[0] < max[0] && p[1] > min[1] && p[1] < max[1]
            }
            Self::EquilateralTriangle { .. } => {
                let v = self.vertex_list();
                (0..3).all(|i| cross(v[i], v[(i + 1) % 3], p) > 0.0)
            }
            Self::Polygon { vertices } => {
                // On-edge points are boundary, not interior.
                let n = vertices.len();
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    if cross(a, b, p) == 0.0
                        && p[0] >= a[0].min(b[0])
                        && p[0] <= a[0].max(b[0])
                        && p[1] >= a[1].min(b[1])
                        && p[1] <= a[1].max(b[1])
                    {
                        return false;
                    }
                }
                winding_number(vertices, p) != 0
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Self::Circle { radius, .. } => std::f64::consts::PI * radius * radius,
            Self::Rectangle { min, max } => (max[0] - min[0]) * (max[1] - min[1]),
            Self::EquilateralTriangle { side, .. } => 3.0f64.sqrt() / 4.0 * side * side,
            Self::Polygon { vertices } => shoelace(vertices),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Self::Circle { radius, .. } => 2.0 * std::f64::consts::PI * radius,
            _ => {
                let v = self.vertex_list();
                let n = v.len();
                (0..n).map(|i| dist(v[i], v[(i + 1) % n])).sum()
            }
        }
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        match self {
            Self::Circle { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Self::Rectangle { min, max } => (*min, *max),
            _ => {
                let v = self.vertex_list();
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for p in v {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Distance from `p` to the boundary curve.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        match self {
            Self::Circle { center, radius } => (dist(p, *center) - radius).abs(),
            _ => {
                let v = self.vertex_list();
                let n = v.len();
                (0..n)
                    .map(|i| point_segment_distance(p, v[i], v[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Uniformly random strict-interior points by rejection from the
    /// bounding box; deterministic per seed.
    pub fn sample_interior(&self, n: usize, seed: u64) -> Result<Vec<Point2>, GeometryError> {
        if self.area() <= 0.0 {
            return Err(GeometryError::DegenerateDomain);
        }
        let (lo, hi) = self.bounding_box();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n);
        let cap = 10_000 * n.max(1);
        let mut attempts = 0;
        while points.len() < n {
            if attempts >= cap {
                return Err(GeometryError::SamplingFailed { attempts });
            }
            attempts += 1;
            let p = [
                rng.gen_range(lo[0]..hi[0]),
                rng.gen_range(lo[1]..hi[1]),
            ];
            if self.contains(p) {
                points.push(p);
            }
        }
        Ok(points)
    }

    /// Perimeter-uniform boundary points; deterministic per seed.
    pub fn sample_boundary(&self, n: usize, seed: u64) -> Vec<Point2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        (0..n)
            .map(|_| self.boundary_point_at(rng.gen_range(0.0..1.0)))
            .collect()
    }

    /// Point at arc-length fraction `u ∈ [0, 1)` along the boundary.
    pub fn boundary_point_at(&self, u: f64) -> Point2 {
        match self {
            Self::Circle { center, radius } => {
                let angle = 2.0 * std::f64::consts::PI * u;
                [
                    center[0] + radius * angle.cos(),
                    center[1] + radius * angle.sin(),
                ]
            }
            _ => {
                let v = self.vertex_list();
                let n = v.len();
                let mut remaining = u * self.perimeter();
                for i in 0..n {
                    let a = v[i];
                    let b = v[(i + 1) % n];
                    let len = dist(a, b);
                    if remaining <= len || i == n - 1 {
                        let t = (remaining / len).min(1.0);
                        return [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    }
                    remaining -= len;
                }
                unreachable!("arc length exhausted");
            }
        }
    }
}

fn winding_number(vertices: &[Point2], p: Point2) -> i32 {
    let n = vertices.len();
    let mut winding = 0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if a[1] <= p[1] {
            if b[1] > p[1] && cross(a, b, p) > 0.0 {
                winding += 1;
            }
        } else if b[1] <= p[1] && cross(a, b, p) < 0.0 {
            winding -= 1;
        }
    }
    winding
}

/// Midpoint-rule integral of `f` over the domain: cells of size `h` tile
/// the bounding box and cells whose centers lie strictly inside
/// contribute `f(center)·h²`.
pub fn integrate_field(
    domain: &Domain2D,
    f: impl Fn(Point2) -> f64,
    h: f64,
) -> Result<f64, GeometryError> {
    if h <= 0.0 {
        return Err(GeometryError::NonPositiveCell(h));
    }
    let (lo, hi) = domain.bounding_box();
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if h > extent {
        return Err(GeometryError::CellTooLarge { h, extent });
    }
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize;
    let mut contributions = Vec::new();
    for j in 0..ny {
        let y = lo[1] + (j as f64 + 0.5) * h;
        for i in 0..nx {
            let x = lo[0] + (i as f64 + 0.5) * h;
            if domain.contains([x, y]) {
                contributions.push(f([x, y]));
            }
        }
    }
    Ok(pairwise_sum(&contributions) * h * h)
}

/// The cell centers `integrate_field` would use, in the same order.
pub fn quadrature_cells(domain: &Domain2D, h: f64) -> Result<Vec<Point2>, GeometryError> {
    if h <= 0.0 {
        return Err(GeometryError::NonPositiveCell(h));
    }
    let (lo, hi) = domain.bounding_box();
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if h > extent {
        return Err(GeometryError::CellTooLarge { h, extent });
    }
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize;
    let mut cells = Vec::new();
    for j in 0..ny {
        let y = lo[1] + (j as f64 + 0.5) * h;
        for i in 0..nx {
            let x = lo[0] + (i as f64 + 0.5) * h;
            if domain.contains([x, y]) {
                cells.push([x, y]);
            }
        }
    }
    Ok(cells)
}

/// The canonical cross-sections studied in this crate, all 0.2 m scale.
pub mod shapes {
    use super::Domain2D;

    /// Disk of diameter 0.2 m centered at the origin.
    pub fn circle() -> Domain2D {
        Domain2D::circle([0.0, 0.0], 0.1).unwrap()
    }

    /// Square of side 0.2 m centered at the origin.
    pub fn square() -> Domain2D {
        Domain2D::rectangle([-0.1, -0.1], [0.1, 0.1]).unwrap()
    }

    /// Equilateral triangle of side 0.2 m, centroid at the origin,
    /// apex up.
    pub fn triangle() -> Domain2D {
        Domain2D::equilateral_triangle([0.0, 0.0], 0.2, std::f64::consts::FRAC_PI_2).unwrap()
    }

    /// The irregular test section: an L-shaped hexagon on a 0.2 m square
    /// footprint.
    pub fn l_shape() -> Domain2D {
        Domain2D::polygon(vec![
            [0.0, 0.0],
            [0.2, 0.0],
            [0.2, 0.1],
            [0.12, 0.1],
            [0.12, 0.2],
            [0.0, 0.2],
        ])
        .unwrap()
    }

    /// Lookup by the CLI-facing case name.
    pub fn by_name(name: &str) -> Option<Domain2D> {
        match name {
            "circle" => Some(circle()),
            "square" => Some(square()),
            "triangle" => Some(triangle()),
            "irregular" => Some(l_shape()),
            _ => None,
        }
    }
}
