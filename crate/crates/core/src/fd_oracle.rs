//! Independent reference solvers: a five-point finite-difference Poisson
//! solver on masked grids, a conservative variable-coefficient 1D scheme,
//! adaptive Simpson quadrature, and the grid-sensitivity sweep. These
//! never share a code path with the network solvers they check.

use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{Domain2D, GeometryError, Point2};
use crate::numeric::pairwise_sum;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("adaptive quadrature exceeded its subdivision budget on [{a}, {b}]")]
    SubdivisionBudget { a: f64, b: f64 },
    #[error("grid too coarse: only {found} interior nodes (need at least {need})")]
    TooFewInteriorNodes { found: usize, need: usize },
    #[error("conjugate gradient failed to converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("coefficient J({x}) = {value} is not positive; system is singular")]
    NonPositiveCoefficient { x: f64, value: f64 },
    #[error("need at least {need} intervals, got {got}")]
    TooFewIntervals { got: usize, need: usize },
    #[error("grid sizes must be strictly decreasing, got {0:?}")]
    BadGridList(Vec<f64>),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------
// Adaptive Simpson quadrature
// ---------------------------------------------------------------------

const SIMPSON_MAX_DEPTH: u32 = 60;

fn simpson_recurse(
    f: &impl Fn(f64) -> f64,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, OracleError> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Standard 15x estimate: |S(h/2) - S(h)| <= 15 * true error of S(h/2).
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(OracleError::SubdivisionBudget { a, b });
    }
    let lhs = simpson_recurse(f, a, lm, m, fa, flm, fm, left, tol / 2.0, depth - 1)?;
    let rhs = simpson_recurse(f, m, rm, b, fm, frm, fb, right, tol / 2.0, depth - 1)?;
    Ok(lhs + rhs)
}

/// Recursive adaptive Simpson integration of `f` over `[a, b]` to
/// absolute tolerance `tol`.
pub fn adaptive_simpson(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, OracleError> {
    assert!(a < b, "integration bounds out of order");
    assert!(tol > 0.0, "tolerance must be positive");
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_recurse(&f, a, m, b, fa, fm, fb, whole, tol, SIMPSON_MAX_DEPTH)
}

// ---------------------------------------------------------------------
// 2D Poisson on a masked grid
// ---------------------------------------------------------------------

/// Node lattice over the bounding box with the strict-interior mask.
/// Nodes outside the mask are pinned to zero (the Dirichlet condition).
pub struct MaskedGrid {
    pub h: f64,
    pub origin: Point2,
    pub nx: usize,
    pub ny: usize,
    /// Unknown index per node, or usize::MAX outside the mask.
    index: Vec<usize>,
    /// Node coordinates per unknown.
    pub nodes: Vec<Point2>,
}

impl MaskedGrid {
    pub fn build(domain: &Domain2D, h: f64) -> Result<Self, OracleError> {
        if h <= 0.0 {
            return Err(GeometryError::NonPositiveCell(h).into());
        }
        let (lo, hi) = domain.bounding_box();
        let nx = ((hi[0] - lo[0]) / h).round() as usize + 1;
        let ny = ((hi[1] - lo[1]) / h).round() as usize + 1;
        let mut index = vec![usize::MAX; nx * ny];
        let mut nodes = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let p = [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
                if domain.contains(p) {
                    index[j * nx + i] = nodes.len();
                    nodes.push(p);
                }
            }
        }
        Ok(Self {
            h,
            origin: lo,
            nx,
            ny,
            index,
            nodes,
        })
    }

    pub fn n_unknowns(&self) -> usize {
        self.nodes.len()
    }

    fn neighbor(&self, node: usize, dx: isize, dy: isize) -> Option<usize> {
        let p = self.nodes[node];
        let i = ((p[0] - self.origin[0]) / self.h).round() as isize + dx;
        let j = ((p[1] - self.origin[1]) / self.h).round() as isize + dy;
        if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
            return None;
        }
        let idx = self.index[j as usize * self.nx + i as usize];
        (idx != usize::MAX).then_some(idx)
    }
}

/// Finite-difference solution of ∇²φ = −2G with φ = 0 on the masked
/// boundary, plus the torsional constant from the nodal field.
pub struct PoissonSolution {
    pub grid: MaskedGrid,
    /// Nodal field values, one per unknown.
    pub phi: Vec<f64>,
    pub j: f64,
    pub cg_iterations: usize,
}

/// Solve the Poisson problem with a five-point stencil and conjugate
/// gradients (residual tolerance 1e-10 relative to the right-hand side).
/// `J` is accumulated as `(2/G)·Σ φ·h²` over the interior nodes.
pub fn solve_poisson_2d(
    domain: &Domain2D,
    shear_modulus: f64,
    h: f64,
) -> Result<PoissonSolution, OracleError> {
    assert!(shear_modulus > 0.0, "shear modulus must be positive");
    let grid = MaskedGrid::build(domain, h)?;
    let n = grid.n_unknowns();
    if n < 25 {
        return Err(OracleError::TooFewInteriorNodes { found: n, need: 25 });
    }

    // Neighbor table once; the matvec is then a flat sweep.
    let mut neighbors = vec![[usize::MAX; 4]; n];
    for node in 0..n {
        for (slot, (dx, dy)) in [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().enumerate() {
            if let Some(idx) = grid.neighbor(node, *dx, *dy) {
                neighbors[node][slot] = idx;
            }
        }
    }
    let h2 = h * h;
    let matvec = |x: &[f64], out: &mut [f64]| {
        for node in 0..n {
            let mut acc = 4.0 * x[node];
            for &nb in &neighbors[node] {
                if nb != usize::MAX {
                    acc -= x[nb];
                }
            }
            out[node] = acc / h2;
        }
    };

    let b = vec![2.0 * shear_modulus; n];
    let b_norm = (b.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let tol = 1e-10;

    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs_old: f64 = r.iter().map(|v| v * v).sum();
    let cap = 100 * (n as f64).sqrt() as usize + 1000;
    let mut iterations = 0;
    while rs_old.sqrt() > tol * b_norm {
        if iterations >= cap {
            return Err(OracleError::NoConvergence {
                iterations,
                residual: rs_old.sqrt() / b_norm,
            });
        }
        matvec(&p, &mut ap);
        let p_ap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rs_old / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
        iterations += 1;
    }

    let contributions: Vec<f64> = x.iter().map(|phi| 2.0 / shear_modulus * phi * h2).collect();
    let j = pairwise_sum(&contributions);
    Ok(PoissonSolution {
        grid,
        phi: x,
        j,
        cg_iterations: iterations,
    })
}

/// Write the nodal field as `x,y,phi` CSV.
pub fn write_oracle_field_csv(solution: &PoissonSolution, path: &Path) -> Result<(), OracleError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,y,phi")?;
    for (node, phi) in solution.grid.nodes.iter().zip(&solution.phi) {
        writeln!(out, "{},{},{}", node[0], node[1], phi)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Grid-sensitivity sweep
// ---------------------------------------------------------------------

/// One grid size in a sensitivity study.
#[derive(Clone, Copy, Debug)]
pub struct SensitivityRow {
    pub h: f64,
    pub j: f64,
    /// |J_h − J_finest| / |J_finest|; None on the finest row (and for a
    /// single-entry sweep).
    pub rel_change: Option<f64>,
}

/// Torsional constants across a strictly decreasing list of grid sizes,
/// each compared against the finest. The relative changes are expected
/// to decrease as the grid refines; only that trend is meaningful.
pub fn sensitivity_sweep(
    domain: &Domain2D,
    shear_modulus: f64,
    hs: &[f64],
) -> Result<Vec<SensitivityRow>, OracleError> {
    if hs.is_empty() || hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(OracleError::BadGridList(hs.to_vec()));
    }
    let js: Vec<f64> = hs
        .iter()
        .map(|&h| solve_poisson_2d(domain, shear_modulus, h).map(|s| s.j))
        .collect::<Result<_, _>>()?;
    let j_finest = *js.last().unwrap();
    Ok(hs
        .iter()
        .zip(&js)
        .enumerate()
        .map(|(row, (&h, &j))| SensitivityRow {
            h,
            j,
            rel_change: (row + 1 != hs.len())
                .then(|| ((j - j_finest) / j_finest).abs()),
        })
        .collect())
}

/// Write a sweep as `h,J,rel_change` CSV (empty cell on the finest row).
pub fn write_sensitivity_csv(rows: &[SensitivityRow], path: &Path) -> Result<(), OracleError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "h,J,rel_change")?;
    for row in rows {
        let rel = row.rel_change.map(|r| r.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{}", row.h, row.j, rel)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------
// 1D variable-coefficient two-point boundary value problem
// ---------------------------------------------------------------------

/// Nodal solution of (J(x)·u')' = 0 on [a, b] with u(a) fixed and the
/// flux J·u' prescribed at b.
pub struct Ode1DSolution {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// Conservative second-order scheme with half-node coefficients
/// J(x_{i±1/2}); Dirichlet on the left, flux (Neumann) on the right.
/// Solved directly by the Thomas algorithm.
pub fn solve_ode_1d(
    coefficient: impl Fn(f64) -> f64,
    left_value: f64,
    right_flux: f64,
    interval: (f64, f64),
    n: usize,
) -> Result<Ode1DSolution, OracleError> {
    if n < 16 {
        return Err(OracleError::TooFewIntervals { got: n, need: 16 });
    }
    let (a, b) = interval;
    assert!(a < b, "interval out of order");
    let h = (b - a) / n as f64;
    let x: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();

    // Half-node coefficients, checked positive.
    let mut j_half = Vec::with_capacity(n);
    for i in 0..n {
        let xm = a + (i as f64 + 0.5) * h;
        let value = coefficient(xm);
        if !(value > 0.0) {
            return Err(OracleError::NonPositiveCoefficient { x: xm, value });
        }
        j_half.push(value);
    }

    // Unknowns u_1..u_n; u_0 is the Dirichlet value.
    // Interior rows: -J_{i-1/2} u_{i-1} + (J_{i-1/2}+J_{i+1/2}) u_i - J_{i+1/2} u_{i+1} = 0.
    // Last row (flux): J_{n-1/2} (u_n - u_{n-1}) = h * right_flux.
    let m = n;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 1..n {
        let row = i - 1;
        lower[row] = -j_half[i - 1];
        diag[row] = j_half[i - 1] + j_half[i];
        upper[row] = -j_half[i];
        rhs[row] = 0.0;
    }
    rhs[0] += j_half[0] * left_value;
    lower[0] = 0.0;
    let last = m - 1;
    lower[last] = -j_half[n - 1];
    diag[last] = j_half[n - 1];
    upper[last] = 0.0;
    rhs[last] = h * right_flux;

    // Thomas elimination.
    for i in 1..m {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut u = vec![0.0; m];
    u[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        u[i] = (rhs[i] - upper[i] * u[i + 1]) / diag[i];
    }

    let mut full = Vec::with_capacity(n + 1);
    full.push(left_value);
    full.extend(u);
    Ok(Ode1DSolution { x, u: full })
}
