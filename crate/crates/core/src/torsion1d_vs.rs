//! The 1D shaft with a sigmoid diameter transition, solved on a
//! stretched domain: the equation (J(x)·φ')' = 0 on [0,1] becomes
//! N·d/dx̄[J(x̄/N)·N·dv/dx̄] = 0 on [0,N] under x̄ = N·x, and the trained
//! v is mapped back through u(x) = v(N·x). The scale factor softens the
//! sharp coefficient transition; N = 1 is the standard solver.

use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autodiff::{jet_mul, jet_scale, jet_shift, jet_sigmoid, jet_sub, Jet2};
use crate::fd_oracle::{adaptive_simpson, OracleError};
use crate::network::{forward_batch, forward_jets, GroupId, JetBatch, NetworkSpec};
use crate::numeric::{linspace, rel_l2};
use crate::optim::{
    train, CollocationCounts, LossWeights, Problem, TrainConfig, TrainError, TrainReport,
};

/// Wall thickness of the hollow cross-section.
const WALL: f64 = 0.2;

#[derive(Debug, Error)]
pub enum Torsion1DError {
    #[error("scale factor must be at least 1, got {0}")]
    ScaleTooSmall(f64),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Outer radius r(x) = 1 + sigmoid(150x − 75): a sharp transition from
/// 1 to 2 centered at x = 0.5.
pub fn radius(x: f64) -> f64 {
    radius_jet(x).value()
}

fn radius_jet(x: f64) -> Jet2 {
    let xj = Jet2::variable(x, 0, 1);
    jet_shift(&jet_sigmoid(&jet_shift(&jet_scale(&xj, 150.0), -75.0)), 1.0)
}

/// Polar moment J(x) = r⁴ − (r − 0.2)⁴ of the hollow section.
pub fn polar_moment(x: f64) -> f64 {
    polar_moment_jet(x).value()
}

/// J(x) with first and second derivatives, built entirely from
/// jet-capable primitives so J'(x) feeds the residual exactly.
pub fn polar_moment_jet(x: f64) -> Jet2 {
    let r = radius_jet(x);
    let inner = jet_shift(&r, -WALL);
    let fourth = |a: &Jet2| {
        let sq = jet_mul(a, a);
        jet_mul(&sq, &sq)
    };
    jet_sub(&fourth(&r), &fourth(&inner))
}

/// Default Adam rate per scale. The stretched landscapes tolerate a
/// slightly larger step; the unstretched one converges best a notch
/// lower (both found by sweeping, the source papers do not report one).
pub fn default_learning_rate(scale: f64) -> f64 {
    if scale < 2.0 {
        4e-3
    } else {
        5e-3
    }
}

/// Prescribed end slope of the unscaled problem: φ'(1) = 32/(π·J(1))
/// with torque and shear modulus normalized to 1.
pub fn neumann_target() -> f64 {
    32.0 / (std::f64::consts::PI * polar_moment(1.0))
}

/// Residual of the stretched equation at x̄ ∈ [0, N]:
/// N·J'(x̄/N)·v'(x̄) + N²·J(x̄/N)·v''(x̄). At N = 1 this is exactly the
/// unscaled residual (J·u')' = J'·u' + J·u''.
pub fn scaled_residual(spec: &NetworkSpec, params: &[f64], x_bar: f64, scale: f64) -> f64 {
    let coeffs = residual_coefficients(x_bar, scale);
    let jet = forward_jets(spec, params, &[x_bar]).expect("1D network");
    coeffs.0 * jet.d1()[0] + coeffs.1 * jet.d2()[0]
}

/// Unscaled residual (J·u')' expanded at x ∈ [0, 1], written without the
/// scale factors as an independent reduction target for N = 1.
pub fn unscaled_residual(spec: &NetworkSpec, params: &[f64], x: f64) -> f64 {
    let j = polar_moment_jet(x);
    let jet = forward_jets(spec, params, &[x]).expect("1D network");
    j.d1()[0] * jet.d1()[0] + j.value() * jet.d2()[0]
}

/// (first-derivative, second-derivative) coefficients of the stretched
/// residual at x̄.
fn residual_coefficients(x_bar: f64, scale: f64) -> (f64, f64) {
    let j = polar_moment_jet(x_bar / scale);
    (scale * j.d1()[0], scale * scale * j.value())
}

/// Dirichlet and Neumann mismatches of the stretched problem:
/// (v(0) − 0, v'(N) − 32/(π·J(1)·N)).
pub fn boundary_terms(spec: &NetworkSpec, params: &[f64], scale: f64) -> (f64, f64) {
    let left = forward_jets(spec, params, &[0.0]).expect("1D network");
    let right = forward_jets(spec, params, &[scale]).expect("1D network");
    (
        left.value(),
        right.d1()[0] - neumann_target() / scale,
    )
}

/// The exact twist profile by quadrature: since (J·φ')' = 0 with
/// J(1)·φ'(1) = 32/π, the first integral gives φ(x) = (32/π)·∫₀ˣ ds/J(s).
pub fn exact_solution(x: f64, tol: f64) -> Result<f64, Torsion1DError> {
    assert!((0.0..=1.0).contains(&x), "x outside the shaft");
    if x == 0.0 {
        return Ok(0.0);
    }
    let flux = 32.0 / std::f64::consts::PI;
    Ok(adaptive_simpson(|s| flux / polar_moment(s), 0.0, x, tol)?)
}

/// Configuration of one stretched-domain run.
#[derive(Clone, Debug)]
pub struct VsConfig {
    pub scale: f64,
    pub epochs: usize,
    pub n_interior: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub oracle_stride: usize,
}

impl VsConfig {
    pub fn new(scale: f64, seed: u64) -> Result<Self, Torsion1DError> {
        if scale < 1.0 {
            return Err(Torsion1DError::ScaleTooSmall(scale));
        }
        Ok(Self {
            scale,
            epochs: 20_000,
            n_interior: 100,
            seed,
            learning_rate: default_learning_rate(scale),
            oracle_stride: 0,
        })
    }

    /// Loss weights of the stretched problem: residual 1/N⁴ and an
    /// aggregate data term `20·(dirichlet² + neumann²)`. The boundary
    /// group is a mean over the two mismatches, so the equal-weighted
    /// sum corresponds to λ_b = 40.
    pub fn loss_weights(&self) -> LossWeights {
        LossWeights::new(self.scale.powi(-4), 40.0)
    }
}

/// The stretched shaft as a trainable problem.
pub struct VsTorsionProblem {
    pub scale: f64,
    pub n_interior: usize,
    spec: NetworkSpec,
    eval_x: Vec<f64>,
    eval_exact: Vec<f64>,
}

impl VsTorsionProblem {
    pub fn new(scale: f64, n_interior: usize) -> Result<Self, Torsion1DError> {
        if scale < 1.0 {
            return Err(Torsion1DError::ScaleTooSmall(scale));
        }
        let eval_x = linspace(0.0, 1.0, 1000);
        let eval_exact = eval_x
            .iter()
            .map(|&x| exact_solution(x, 1e-10))
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(Self {
            scale,
            n_interior,
            spec: NetworkSpec::new(1, vec![32, 32]).unwrap(),
            eval_x,
            eval_exact,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// Back-transformed prediction u(x) = v(N·x) over the fixed
    /// 1000-point evaluation grid.
    pub fn predict_on_grid(&self, params: &[f64]) -> Vec<f64> {
        let inputs: Vec<f64> = self.eval_x.iter().map(|&x| self.scale * x).collect();
        forward_batch(&self.spec, params, &inputs)
    }

    pub fn eval_grid(&self) -> (&[f64], &[f64]) {
        (&self.eval_x, &self.eval_exact)
    }
}

impl Problem for VsTorsionProblem {
    fn network_spec(&self) -> &NetworkSpec {
        &self.spec
    }

    fn sample_batch(&self, _counts: &CollocationCounts, rng: &mut ChaCha8Rng) -> JetBatch {
        let mut batch = JetBatch::new(1, vec![0]);
        for _ in 0..self.n_interior {
            let x_bar = rng.gen_range(0.0..self.scale);
            let (c_d1, c_d2) = residual_coefficients(x_bar, self.scale);
            batch.push(&[x_bar], 0.0, &[c_d1], &[c_d2], 0.0, GroupId::Residual);
        }
        batch.push(&[0.0], 1.0, &[0.0], &[0.0], 0.0, GroupId::Boundary);
        batch.push(
            &[self.scale],
            0.0,
            &[1.0],
            &[0.0],
            -neumann_target() / self.scale,
            GroupId::Boundary,
        );
        batch
    }

    fn oracle_error(&self, params: &[f64]) -> Option<f64> {
        let pred = self.predict_on_grid(params);
        Some(rel_l2(&pred, &self.eval_exact))
    }
}

/// Result of one run: the relative L2 error of the back-transformed
/// solution on the 1000-point grid, plus training telemetry.
#[derive(Clone, Debug)]
pub struct VsCaseReport {
    pub scale: f64,
    pub seed: u64,
    pub rel_l2: f64,
    pub train: TrainReport,
    pub params: Vec<f64>,
}

/// Train the stretched problem and measure the back-transformed error.
pub fn run_vs_case(config: &VsConfig) -> Result<VsCaseReport, Torsion1DError> {
    let problem = VsTorsionProblem::new(config.scale, config.n_interior)?;
    let mut train_config = TrainConfig::new(config.epochs, config.seed, config.loss_weights());
    train_config.learning_rate = config.learning_rate;
    train_config.counts.n_r = config.n_interior;
    train_config.oracle_stride = config.oracle_stride;
    let (params, report) = train(&problem, &train_config)?;
    let rel_l2 = problem.oracle_error(&params).unwrap();
    Ok(VsCaseReport {
        scale: config.scale,
        seed: config.seed,
        rel_l2,
        train: report,
        params,
    })
}

/// Write `x,phi_pred,phi_exact` over the evaluation grid.
pub fn write_solution_csv(
    problem: &VsTorsionProblem,
    params: &[f64],
    path: &Path,
) -> Result<(), Torsion1DError> {
    let pred = problem.predict_on_grid(params);
    let (xs, exact) = problem.eval_grid();
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "x,phi_pred,phi_exact")?;
    for i in 0..xs.len() {
        writeln!(file, "{},{},{}", xs[i], pred[i], exact[i])?;
    }
    Ok(())
}

/// Write `epoch,rel_l2` for the epochs where the oracle ran.
pub fn write_errors_csv(report: &TrainReport, path: &Path) -> Result<(), Torsion1DError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "epoch,rel_l2")?;
    for record in &report.records {
        if let Some(err) = record.rel_l2 {
            writeln!(file, "{},{}", record.epoch, err)?;
        }
    }
    Ok(())
}
