//! The 2D Saint-Venant problem: collocation losses for ∇²φ′ = −2G with
//! φ′ = 0 on the boundary, torsional-constant extraction, shear-stress
//! recovery, and closed-form references for circle, square and triangle.

use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autodiff::{jet_add, jet_mul, jet_scale, jet_shift, Jet2};
use crate::geometry::{quadrature_cells, Domain2D, GeometryError, Point2, PointSet};
use crate::network::{
    forward_batch, forward_jets, forward_jets_batch, GroupId, JetBatch, NetworkSpec,
};
use crate::numeric::{pairwise_sum, rel_l2};
use crate::optim::{
    train, CollocationCounts, LossWeights, Problem, TrainConfig, TrainError, TrainReport,
};

#[derive(Debug, Error)]
pub enum Torsion2DError {
    #[error("no closed-form torsional constant for this shape; use the finite-difference oracle")]
    NoClosedForm,
    #[error("point ({0}, {1}) lies outside the disk")]
    OutsideDisk(f64, f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Oracle(#[from] crate::fd_oracle::OracleError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Where training points come from: a lattice mirroring the reference
/// grids, uniform sampling, or an imported set.
#[derive(Clone, Debug)]
pub enum PointSource {
    Grid { spacing: f64 },
    Sampled { n_interior: usize, n_boundary: usize },
    Imported(PointSet),
}

/// One 2D torsion case: domain, shear modulus, loss weights and the
/// collocation source.
#[derive(Clone, Debug)]
pub struct Torsion2DProblem {
    pub domain: Domain2D,
    pub shear_modulus: f64,
    pub weights: LossWeights,
    pub points: PointSource,
    spec: NetworkSpec,
}

impl Torsion2DProblem {
    /// Defaults: G = 1 (normalized runs), λ_r = 1, λ_b = 100 000, a
    /// 0.005 m lattice, and a 3×64 tanh network.
    pub fn new(domain: Domain2D) -> Self {
        Self {
            domain,
            shear_modulus: 1.0,
            weights: LossWeights::new(1.0, 1.0e5),
            points: PointSource::Grid { spacing: 0.005 },
            spec: NetworkSpec::new(2, vec![64, 64, 64]).unwrap(),
        }
    }

    pub fn with_network(mut self, spec: NetworkSpec) -> Self {
        assert_eq!(spec.input_dim(), 2, "2D problem needs a 2-input network");
        self.spec = spec;
        self
    }

    pub fn with_points(mut self, points: PointSource) -> Self {
        self.points = points;
        self
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    fn point_set(&self, rng: &mut ChaCha8Rng) -> PointSet {
        match &self.points {
            PointSource::Grid { spacing } => PointSet::grid(&self.domain, *spacing)
                .expect("lattice generation on a validated domain"),
            PointSource::Sampled {
                n_interior,
                n_boundary,
            } => {
                let seed = rng.gen::<u64>();
                PointSet::sampled(&self.domain, *n_interior, *n_boundary, seed)
                    .expect("sampling on a validated domain")
            }
            PointSource::Imported(set) => set.clone(),
        }
    }

    fn batch_from(&self, set: &PointSet) -> JetBatch {
        let mut batch = JetBatch::new(2, vec![0, 1]);
        let two_g = 2.0 * self.shear_modulus;
        for p in &set.interior {
            // r = u_xx + u_yy + 2G.
            batch.push(p, 0.0, &[0.0, 0.0], &[1.0, 1.0], two_g, GroupId::Residual);
        }
        for p in &set.boundary {
            batch.push(p, 1.0, &[0.0, 0.0], &[0.0, 0.0], 0.0, GroupId::Boundary);
        }
        batch
    }
}

impl Problem for Torsion2DProblem {
    fn network_spec(&self) -> &NetworkSpec {
        &self.spec
    }

    fn sample_batch(&self, _counts: &CollocationCounts, rng: &mut ChaCha8Rng) -> JetBatch {
        let set = self.point_set(rng);
        self.batch_from(&set)
    }

    fn oracle_error(&self, params: &[f64]) -> Option<f64> {
        // Only the disk has a closed-form field to compare against.
        if let Domain2D::Circle { center, radius } = &self.domain {
            let cells = quadrature_cells(&self.domain, radius / 20.0).ok()?;
            let inputs: Vec<f64> = cells.iter().flatten().copied().collect();
            let pred = forward_batch(&self.spec, params, &inputs);
            let exact: Vec<f64> = cells
                .iter()
                .map(|p| {
                    let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                    0.5 * self.shear_modulus * (radius * radius - r2)
                })
                .collect();
            Some(rel_l2(&pred, &exact))
        } else {
            None
        }
    }
}

/// PDE residual ∇²φ′ + 2G of the network at a strictly interior point.
pub fn residual(problem: &Torsion2DProblem, params: &[f64], p: Point2) -> f64 {
    let jet = forward_jets(&problem.spec, params, &p).expect("dimension checked");
    jet.d2()[0] + jet.d2()[1] + 2.0 * problem.shear_modulus
}

/// The closed-form disk field φ′(p) = (G/2)(a² − r²), zero on the rim.
pub fn analytic_circle_field(radius: f64, shear_modulus: f64, p: Point2) -> Result<f64, Torsion2DError> {
    let r2 = p[0] * p[0] + p[1] * p[1];
    if r2 > radius * radius * (1.0 + 1e-12) {
        return Err(Torsion2DError::OutsideDisk(p[0], p[1]));
    }
    Ok(0.5 * shear_modulus * (radius * radius - r2))
}

/// The disk field as a jet graph, for derivative self-checks: builds
/// (G/2)(a² − x² − y²) from the closed operation set.
pub fn analytic_circle_field_jet(radius: f64, shear_modulus: f64, p: Point2) -> Jet2 {
    let x = Jet2::variable(p[0], 0, 2);
    let y = Jet2::variable(p[1], 1, 2);
    let r2 = jet_add(&jet_mul(&x, &x), &jet_mul(&y, &y));
    jet_shift(
        &jet_scale(&r2, -0.5 * shear_modulus),
        0.5 * shear_modulus * radius * radius,
    )
}

/// Classical torsional constants: disk πa⁴/2, rectangle by the torsion
/// series summed to convergence, equilateral triangle √3·s⁴/80. The
/// polygon has no closed form.
pub fn analytic_j(domain: &Domain2D) -> Result<f64, Torsion2DError> {
    match domain {
        Domain2D::Circle { radius, .. } => Ok(std::f64::consts::PI * radius.powi(4) / 2.0),
        Domain2D::Rectangle { min, max } => {
            let (w, h) = (max[0] - min[0], max[1] - min[1]);
            Ok(rectangle_series_j(w.max(h), w.min(h)))
        }
        Domain2D::EquilateralTriangle { side, .. } => Ok(3.0f64.sqrt() * side.powi(4) / 80.0),
        Domain2D::Polygon { .. } => Err(Torsion2DError::NoClosedForm),
    }
}

/// J = a·b³·[1/3 − (64/π⁵)(b/a)·Σ_{n odd} tanh(nπa/2b)/n⁵] for a ≥ b,
/// summed until the next term falls below 1e-12 of the partial sum.
fn rectangle_series_j(a: f64, b: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 1u32;
    loop {
        let nf = n as f64;
        let term = (nf * std::f64::consts::PI * a / (2.0 * b)).tanh() / nf.powi(5);
        sum += term;
        if term < 1e-12 * sum || n > 999 {
            break;
        }
        n += 2;
    }
    a * b.powi(3) * (1.0 / 3.0 - 64.0 / std::f64::consts::PI.powi(5) * (b / a) * sum)
}

/// Torsional constant of a trained model by midpoint quadrature.
#[derive(Clone, Debug)]
pub struct TorsionalConstantResult {
    pub j: f64,
    pub h: f64,
    pub n_cells: usize,
}

pub fn torsional_constant(
    problem: &Torsion2DProblem,
    params: &[f64],
    h: f64,
) -> Result<TorsionalConstantResult, Torsion2DError> {
    let cells = quadrature_cells(&problem.domain, h)?;
    let inputs: Vec<f64> = cells.iter().flatten().copied().collect();
    let values = forward_batch(&problem.spec, params, &inputs);
    let integral = pairwise_sum(&values) * h * h;
    Ok(TorsionalConstantResult {
        j: 2.0 / problem.shear_modulus * integral,
        h,
        n_cells: cells.len(),
    })
}

/// Shear stresses recovered from the stress function: τ_zx = ∂φ′/∂y,
/// τ_zy = −∂φ′/∂x (per unit rate of twist when G is normalized).
#[derive(Clone, Copy, Debug)]
pub struct ShearStress {
    pub tau_zx: f64,
    pub tau_zy: f64,
}

pub fn shear_stress(spec: &NetworkSpec, params: &[f64], p: Point2) -> ShearStress {
    let jet = forward_jets(spec, params, &p).expect("dimension checked");
    ShearStress {
        tau_zx: jet.d1()[1],
        tau_zy: -jet.d1()[0],
    }
}

/// Reference value for a case: closed form where one exists, otherwise
/// the finite-difference oracle.
#[derive(Clone, Copy, Debug)]
pub enum ReferenceKind {
    Auto,
    Analytic,
    FiniteDifference { h: f64 },
}

#[derive(Clone, Debug)]
pub struct CaseConfig {
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub quadrature_h: f64,
    pub oracle_stride: usize,
    pub reference: ReferenceKind,
}

impl CaseConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            epochs: 10_000,
            seed,
            learning_rate: 1e-3,
            quadrature_h: 0.001,
            oracle_stride: 0,
            reference: ReferenceKind::Auto,
        }
    }
}

/// Everything a finished case produces: the trained parameters, the
/// torsional constant against its reference, and the loss history.
#[derive(Clone, Debug)]
pub struct CaseReport {
    pub j_pinn: f64,
    pub j_reference: f64,
    pub rel_error: f64,
    pub train: TrainReport,
    pub params: Vec<f64>,
}

fn reference_j(
    problem: &Torsion2DProblem,
    reference: ReferenceKind,
) -> Result<f64, Torsion2DError> {
    match reference {
        ReferenceKind::Analytic => analytic_j(&problem.domain),
        ReferenceKind::FiniteDifference { h } => Ok(crate::fd_oracle::solve_poisson_2d(
            &problem.domain,
            problem.shear_modulus,
            h,
        )?
        .j),
        ReferenceKind::Auto => match analytic_j(&problem.domain) {
            Ok(j) => Ok(j),
            Err(Torsion2DError::NoClosedForm) => reference_j(
                problem,
                ReferenceKind::FiniteDifference { h: 0.0025 },
            ),
            Err(e) => Err(e),
        },
    }
}

/// Train one case and compare its torsional constant to the reference.
/// On divergence the error carries the artifacts computed from the last
/// finite parameters.
pub fn run_case(
    problem: &Torsion2DProblem,
    config: &CaseConfig,
) -> Result<CaseReport, Torsion2DError> {
    let mut train_config = TrainConfig::new(config.epochs, config.seed, problem.weights);
    train_config.learning_rate = config.learning_rate;
    train_config.oracle_stride = config.oracle_stride;

    let j_reference = reference_j(problem, config.reference)?;
    let build = |params: Vec<f64>, train: TrainReport| -> Result<CaseReport, Torsion2DError> {
        let j_pinn = torsional_constant(problem, &params, config.quadrature_h)?.j;
        Ok(CaseReport {
            j_pinn,
            j_reference,
            rel_error: (j_pinn - j_reference).abs() / j_reference.abs(),
            train,
            params,
        })
    };

    match train(problem, &train_config) {
        Ok((params, report)) => build(params, report),
        Err(TrainError::Diverged {
            quantity,
            epoch,
            last_good,
        }) => {
            let (params, report) = *last_good;
            // Keep whatever the last finite parameters can still produce.
            let partial = build(params, report)?;
            Err(TrainError::Diverged {
                quantity,
                epoch,
                last_good: Box::new((partial.params.clone(), partial.train.clone())),
            }
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Evaluate the trained field on the lattice and write
/// `x,y,phi,tau_zx,tau_zy`.
pub fn write_field_csv(
    problem: &Torsion2DProblem,
    params: &[f64],
    spacing: f64,
    path: &Path,
) -> Result<(), Torsion2DError> {
    let set = PointSet::grid(&problem.domain, spacing)?;
    let mut points = set.interior.clone();
    points.extend_from_slice(&set.boundary);
    let inputs: Vec<f64> = points.iter().flatten().copied().collect();
    let outs = forward_jets_batch(&problem.spec, params, &inputs, &[0, 1]);
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "x,y,phi,tau_zx,tau_zy")?;
    for (i, p) in points.iter().enumerate() {
        writeln!(
            file,
            "{},{},{},{},{}",
            p[0],
            p[1],
            outs.value[i],
            outs.d1[i * 2 + 1],
            -outs.d1[i * 2],
        )?;
    }
    Ok(())
}

/// One-row comparison CSV: `j_pinn,j_reference,rel_error`.
pub fn write_summary_csv(report: &CaseReport, path: &Path) -> Result<(), Torsion2DError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "j_pinn,j_reference,rel_error")?;
    writeln!(
        file,
        "{},{},{}",
        report.j_pinn, report.j_reference, report.rel_error
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{integrate_field, shapes};
    use crate::network::init_params;

    #[test]
    fn circle_field_values() {
        assert!((analytic_circle_field(0.1, 1.0, [0.0, 0.0]).unwrap() - 0.005).abs() < 1e-15);
        assert_eq!(analytic_circle_field(0.1, 1.0, [0.1, 0.0]).unwrap(), 0.0);
        assert!(analytic_circle_field(0.1, 1.0, [0.2, 0.0]).is_err());
    }

    #[test]
    fn circle_field_jet_laplacian_is_minus_two_g() {
        for g in [1.0, 7.3] {
            for p in [[0.0, 0.0], [0.03, -0.05], [0.07, 0.01]] {
                let jet = analytic_circle_field_jet(0.1, g, p);
                let laplacian = jet.d2()[0] + jet.d2()[1];
                assert!(
                    (laplacian + 2.0 * g).abs() < 1e-10,
                    "∇²φ = {laplacian} at {p:?} (G = {g})"
                );
                // Gradient matches the closed form -G·p as well.
                assert!((jet.d1()[0] + g * p[0]).abs() < 1e-12);
                assert!((jet.d1()[1] + g * p[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_j_values() {
        let j_circle = analytic_j(&shapes::circle()).unwrap();
        assert!((j_circle - std::f64::consts::PI * 1e-4 / 2.0).abs() < 1e-18);

        // Square series: 0.140577·s⁴ for s = 0.2.
        let j_square = analytic_j(&shapes::square()).unwrap();
        assert!((j_square / 0.2f64.powi(4) - 0.140577).abs() < 1e-5, "{j_square}");

        let j_triangle = analytic_j(&shapes::triangle()).unwrap();
        assert!((j_triangle - 3.0f64.sqrt() * 1.6e-3 / 80.0).abs() < 1e-18);

        assert!(matches!(
            analytic_j(&shapes::l_shape()),
            Err(Torsion2DError::NoClosedForm)
        ));
    }

    #[test]
    fn analytic_j_scales_as_fourth_power() {
        for scale in [0.5, 2.0, 3.0] {
            let circle = Domain2D::circle([0.0, 0.0], 0.1 * scale).unwrap();
            let square =
                Domain2D::rectangle([0.0, 0.0], [0.2 * scale, 0.2 * scale]).unwrap();
            let triangle =
                Domain2D::equilateral_triangle([0.0, 0.0], 0.2 * scale, 0.0).unwrap();
            let pow4 = scale.powi(4);
            for (base, scaled) in [
                (shapes::circle(), circle),
                (shapes::square(), square),
                (shapes::triangle(), triangle),
            ] {
                let ratio = analytic_j(&scaled).unwrap() / analytic_j(&base).unwrap();
                assert!((ratio - pow4).abs() < 1e-9 * pow4, "ratio {ratio}");
            }
        }
    }

    #[test]
    fn square_series_cross_checks_against_fd() {
        let j_series = analytic_j(&shapes::square()).unwrap();
        let j_fd = crate::fd_oracle::solve_poisson_2d(&shapes::square(), 1.0, 0.00125)
            .unwrap()
            .j;
        let rel = (j_fd - j_series).abs() / j_series;
        assert!(rel < 0.005, "series {j_series} vs FD {j_fd} (rel {rel})");
    }

    #[test]
    fn triangle_formula_cross_checks_against_fd() {
        // Slanted edges staircase at first order; extrapolate two grids
        // to the limit before comparing.
        let j_exact = analytic_j(&shapes::triangle()).unwrap();
        let coarse = crate::fd_oracle::solve_poisson_2d(&shapes::triangle(), 1.0, 0.00125)
            .unwrap()
            .j;
        let fine = crate::fd_oracle::solve_poisson_2d(&shapes::triangle(), 1.0, 0.000625)
            .unwrap()
            .j;
        let extrapolated = 2.0 * fine - coarse;
        let rel = (extrapolated - j_exact).abs() / j_exact;
        assert!(
            rel < 0.005,
            "formula {j_exact} vs FD limit {extrapolated} (rel {rel})"
        );
    }

    #[test]
    fn zero_network_residual_is_two_g() {
        let problem = Torsion2DProblem::new(shapes::circle());
        let params = vec![0.0; problem.spec().param_count()];
        for p in [[0.0, 0.0], [0.05, 0.02], [-0.03, 0.08]] {
            assert_eq!(residual(&problem, &params, p), 2.0);
        }
    }

    #[test]
    fn residual_is_a_pure_function_of_the_point() {
        let problem = Torsion2DProblem::new(shapes::square());
        let params = init_params(problem.spec(), 3);
        let pts = [[0.01, 0.02], [-0.05, 0.03], [0.07, -0.07]];
        let forward_order: Vec<f64> = pts.iter().map(|&p| residual(&problem, &params, p)).collect();
        let reverse_order: Vec<f64> = pts
            .iter()
            .rev()
            .map(|&p| residual(&problem, &params, p))
            .collect();
        for (a, b) in forward_order.iter().zip(reverse_order.iter().rev()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn torsional_constant_of_zero_network_is_zero() {
        let problem = Torsion2DProblem::new(shapes::circle());
        let params = vec![0.0; problem.spec().param_count()];
        let result = torsional_constant(&problem, &params, 0.002).unwrap();
        assert_eq!(result.j, 0.0);
        assert!(result.n_cells > 5000);
    }

    #[test]
    fn analytic_integrand_gives_j_by_quadrature() {
        // (2/G)·∫ (G/2)(a² − r²) dA = πa⁴/2 within 0.5% at h = a/100.
        let exact = std::f64::consts::PI * 0.1f64.powi(4) / 2.0;
        let integral = integrate_field(
            &shapes::circle(),
            |p| analytic_circle_field(0.1, 1.0, p).unwrap(),
            0.001,
        )
        .unwrap();
        let j = 2.0 * integral;
        assert!((j - exact).abs() / exact < 0.005, "{j} vs {exact}");
    }

    #[test]
    fn zero_network_shear_stress_vanishes() {
        let problem = Torsion2DProblem::new(shapes::circle());
        let params = vec![0.0; problem.spec().param_count()];
        let tau = shear_stress(problem.spec(), &params, [0.03, 0.04]);
        assert_eq!(tau.tau_zx, 0.0);
        assert_eq!(tau.tau_zy, 0.0);
    }

    #[test]
    fn analytic_circle_shear_stress_along_the_axis() {
        // For φ′ = (G/2)(a² − r²): τ_zy(x, 0) = G·x and τ_zx(x, 0) = 0.
        let g = 1.0;
        for x in [0.02, 0.05, 0.09] {
            let jet = analytic_circle_field_jet(0.1, g, [x, 0.0]);
            let tau_zx = jet.d1()[1];
            let tau_zy = -jet.d1()[0];
            assert!((tau_zy - g * x).abs() < 1e-13);
            assert!(tau_zx.abs() < 1e-13);
        }
    }

    /// A scaled-down end-to-end case: small net, few points, short run.
    /// The full-size runs live in the acceptance suite.
    #[test]
    fn small_circle_case_trains_and_compares() {
        let problem = Torsion2DProblem::new(shapes::circle())
            .with_network(NetworkSpec::new(2, vec![16, 16]).unwrap())
            .with_points(PointSource::Sampled {
                n_interior: 300,
                n_boundary: 120,
            });
        let mut config = CaseConfig::new(1);
        config.epochs = 5000;
        config.quadrature_h = 0.002;
        let report = run_case(&problem, &config).unwrap();
        assert!(
            report.rel_error < 0.05,
            "J {} vs {} (rel {})",
            report.j_pinn,
            report.j_reference,
            report.rel_error
        );
        assert_eq!(report.train.records.len(), 5000);

        // The trained fit doubles as the oracle-fitted-network check:
        // interior residuals stay within an order of magnitude of the
        // RMS residual the training reached.
        let fit_tol = report.train.final_loss().unwrap().loss_r.sqrt();
        let fresh = shapes::circle().sample_interior(200, 77).unwrap();
        let mean_abs_residual = fresh
            .iter()
            .map(|&p| residual(&problem, &report.params, p).abs())
            .sum::<f64>()
            / fresh.len() as f64;
        assert!(
            mean_abs_residual <= 10.0 * fit_tol,
            "mean |residual| {mean_abs_residual} vs fit tolerance {fit_tol}"
        );
    }
}
