//! Collocation point sets and their file formats: CSV import/export of
//! interior/boundary points and the declarative domain description file.

use std::fmt::Write as _;
use std::path::Path;

use super::{Domain2D, GeometryError, Point2};

/// How a point set came to be.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Sampled { seed: u64 },
    Imported { path: String },
    Grid { spacing: f64 },
}

/// Interior and boundary collocation points for one domain.
#[derive(Clone, Debug)]
pub struct PointSet {
    pub interior: Vec<Point2>,
    pub boundary: Vec<Point2>,
    pub provenance: Provenance,
}

/// Tolerance for "lies on the boundary curve" during validation.
const BOUNDARY_TOL: f64 = 1e-9;

impl PointSet {
    /// Lattice points with the given spacing: strict-interior nodes of
    /// the axis-aligned grid anchored at the bounding-box corner, plus
    /// arc-length-uniform boundary points at roughly the same spacing.
    pub fn grid(domain: &Domain2D, spacing: f64) -> Result<Self, GeometryError> {
        if spacing <= 0.0 {
            return Err(GeometryError::NonPositiveCell(spacing));
        }
        let (lo, hi) = domain.bounding_box();
        let nx = ((hi[0] - lo[0]) / spacing).round() as usize;
        let ny = ((hi[1] - lo[1]) / spacing).round() as usize;
        let mut interior = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                let p = [lo[0] + i as f64 * spacing, lo[1] + j as f64 * spacing];
                if domain.contains(p) {
                    interior.push(p);
                }
            }
        }
        let n_boundary = (domain.perimeter() / spacing).round().max(4.0) as usize;
        let boundary = (0..n_boundary)
            .map(|k| domain.boundary_point_at(k as f64 / n_boundary as f64))
            .collect();
        Ok(Self {
            interior,
            boundary,
            provenance: Provenance::Grid { spacing },
        })
    }

    /// Uniformly sampled interior and boundary points.
    pub fn sampled(
        domain: &Domain2D,
        n_interior: usize,
        n_boundary: usize,
        seed: u64,
    ) -> Result<Self, GeometryError> {
        Ok(Self {
            interior: domain.sample_interior(n_interior, seed)?,
            boundary: domain.sample_boundary(n_boundary, seed),
            provenance: Provenance::Sampled { seed },
        })
    }

    /// Check every point against a domain: interior points must be
    /// strictly inside, boundary points within 1e-9 of the boundary.
    pub fn validate(&self, domain: &Domain2D) -> Result<(), GeometryError> {
        for (index, p) in self.interior.iter().enumerate() {
            if !domain.contains(*p) {
                return Err(GeometryError::PointOutsideDomain {
                    index,
                    x: p[0],
                    y: p[1],
                    kind: "interior",
                });
            }
        }
        for (index, p) in self.boundary.iter().enumerate() {
            if domain.boundary_distance(*p) > BOUNDARY_TOL {
                return Err(GeometryError::PointOutsideDomain {
                    index,
                    x: p[0],
                    y: p[1],
                    kind: "boundary",
                });
            }
        }
        Ok(())
    }
}

/// Write a point set as `kind,x,y` CSV.
pub fn save_points(set: &PointSet, path: &Path) -> Result<(), GeometryError> {
    let mut text = String::from("kind,x,y\n");
    for p in &set.interior {
        let _ = writeln!(text, "interior,{},{}", p[0], p[1]);
    }
    for p in &set.boundary {
        let _ = writeln!(text, "boundary,{},{}", p[0], p[1]);
    }
    std::fs::write(path, text).map_err(|e| GeometryError::File(format!("{}: {e}", path.display())))
}

/// Read a `kind,x,y` CSV. When a domain is supplied every point is
/// validated against it; violations are reported, not dropped.
pub fn load_points(path: &Path, domain: Option<&Domain2D>) -> Result<PointSet, GeometryError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GeometryError::File(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "kind,x,y" => {}
        other => {
            return Err(GeometryError::File(format!(
                "{}: expected header 'kind,x,y', found {:?}",
                path.display(),
                other.map(|(_, l)| l).unwrap_or("<empty file>")
            )))
        }
    }

    let mut set = PointSet {
        interior: Vec::new(),
        boundary: Vec::new(),
        provenance: Provenance::Imported {
            path: path.display().to_string(),
        },
    };
    for (line_idx, line) in lines {
        let line_no = line_idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let kind = fields.next().unwrap_or("").trim();
        let x = fields.next().map(str::trim);
        let y = fields.next().map(str::trim);
        let (x, y) = match (x, y, fields.next()) {
            (Some(x), Some(y), None) => (x, y),
            _ => {
                return Err(GeometryError::File(format!(
                    "{}:{line_no}: expected 3 fields 'kind,x,y', got {line:?}",
                    path.display()
                )))
            }
        };
        let parse = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|e| {
                GeometryError::File(format!("{}:{line_no}: bad {what} {s:?}: {e}", path.display()))
            })
        };
        let p = [parse(x, "x")?, parse(y, "y")?];
        match kind {
            "interior" => set.interior.push(p),
            "boundary" => set.boundary.push(p),
            other => {
                return Err(GeometryError::File(format!(
                    "{}:{line_no}: unknown kind {other:?} (expected interior or boundary)",
                    path.display()
                )))
            }
        }
    }

    if let Some(domain) = domain {
        set.validate(domain)?;
    }
    Ok(set)
}

fn parse_pair(value: &str, line_no: usize) -> Result<Point2, GeometryError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(GeometryError::File(format!(
            "line {line_no}: expected 'x, y', got {value:?}"
        )));
    }
    let x = parts[0]
        .parse::<f64>()
        .map_err(|e| GeometryError::File(format!("line {line_no}: {e}")))?;
    let y = parts[1]
        .parse::<f64>()
        .map_err(|e| GeometryError::File(format!("line {line_no}: {e}")))?;
    Ok([x, y])
}

/// Parse the declarative domain description format: `key = value` lines
/// with `#` comments. Shapes: circle (center, radius), rectangle
/// (min, max), triangle (centroid, side, orientation), polygon
/// (vertices as `x,y; x,y; …`). Unknown keys are rejected.
pub fn parse_domain_text(text: &str) -> Result<Domain2D, GeometryError> {
    let mut shape: Option<String> = None;
    let mut pairs: Vec<(String, String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            GeometryError::File(format!("line {line_no}: expected 'key = value', got {raw:?}"))
        })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key == "shape" {
            shape = Some(value);
        } else {
            pairs.push((key, value, line_no));
        }
    }
    let shape = shape.ok_or_else(|| GeometryError::File("missing 'shape' key".into()))?;

    let lookup = |name: &str| -> Result<(String, usize), GeometryError> {
        pairs
            .iter()
            .find(|(k, _, _)| k == name)
            .map(|(_, v, l)| (v.clone(), *l))
            .ok_or_else(|| GeometryError::File(format!("missing '{name}' for shape {shape}")))
    };
    let expect_keys = |allowed: &[&str]| -> Result<(), GeometryError> {
        for (k, _, line_no) in &pairs {
            if !allowed.contains(&k.as_str()) {
                return Err(GeometryError::File(format!(
                    "line {line_no}: unknown key {k:?} for shape {shape}"
                )));
            }
        }
        Ok(())
    };

    match shape.as_str() {
        "circle" => {
            expect_keys(&["center", "radius"])?;
            let (center, line) = lookup("center")?;
            let center = parse_pair(&center, line)?;
            let (radius, line) = lookup("radius")?;
            let radius = radius
                .parse::<f64>()
                .map_err(|e| GeometryError::File(format!("line {line}: {e}")))?;
            Domain2D::circle(center, radius)
        }
        "rectangle" => {
            expect_keys(&["min", "max"])?;
            let (min, line) = lookup("min")?;
            let min = parse_pair(&min, line)?;
            let (max, line) = lookup("max")?;
            let max = parse_pair(&max, line)?;
            Domain2D::rectangle(min, max)
        }
        "triangle" => {
            expect_keys(&["centroid", "side", "orientation"])?;
            let (centroid, line) = lookup("centroid")?;
            let centroid = parse_pair(&centroid, line)?;
            let (side, line) = lookup("side")?;
            let side = side
                .parse::<f64>()
                .map_err(|e| GeometryError::File(format!("line {line}: {e}")))?;
            let orientation = match pairs.iter().find(|(k, _, _)| k == "orientation") {
                Some((_, v, line)) => v
                    .parse::<f64>()
                    .map_err(|e| GeometryError::File(format!("line {line}: {e}")))?,
                None => std::f64::consts::FRAC_PI_2,
            };
            Domain2D::equilateral_triangle(centroid, side, orientation)
        }
        "polygon" => {
            expect_keys(&["vertices"])?;
            let (vertices, line) = lookup("vertices")?;
            let parsed: Result<Vec<Point2>, _> = vertices
                .split(';')
                .map(|pair| parse_pair(pair, line))
                .collect();
            Domain2D::polygon(parsed?)
        }
        other => Err(GeometryError::File(format!("unknown shape {other:?}"))),
    }
}

/// Read a domain description file (see [`parse_domain_text`]).
pub fn parse_domain_file(path: &Path) -> Result<Domain2D, GeometryError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GeometryError::File(format!("{}: {e}", path.display())))?;
    parse_domain_text(&text)
}
