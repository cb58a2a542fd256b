//! Parametric solver for −φ″ = T·exp(−(x−m)²/(2σ²)) on [0,1] with
//! φ(0) = φ′(1) = 0: one network takes (x, T, m, σ) and is trained over
//! the whole parameter box, so new force profiles are answered by a
//! forward pass instead of a retrain.

pub mod service;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fd_oracle::{adaptive_simpson, OracleError};
use crate::network::{
    forward_batch, load_checkpoint, save_checkpoint, Checkpoint, CheckpointError, GroupId,
    JetBatch, NetworkSpec,
};
use crate::numeric::{linspace, rel_l2};
use crate::optim::{
    train, CollocationCounts, LossWeights, Problem, TrainConfig, TrainError, TrainReport,
};

/// One force configuration: amplitude, center and spread of the
/// Gaussian body force.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub amplitude: f64,
    pub mean: f64,
    pub sigma: f64,
}

/// The training box [1,10] × [0.5,0.9] × [0.2,1].
pub const PARAM_BOX: [(f64, f64); 3] = [(1.0, 10.0), (0.5, 0.9), (0.2, 1.0)];

impl ParamPoint {
    pub fn new(amplitude: f64, mean: f64, sigma: f64) -> Self {
        assert!(sigma > 0.0, "sigma must be positive");
        Self {
            amplitude,
            mean,
            sigma,
        }
    }

    /// True when the point lies inside the training box.
    pub fn in_box(&self) -> bool {
        let values = [self.amplitude, self.mean, self.sigma];
        values
            .iter()
            .zip(PARAM_BOX.iter())
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn uniform(rng: &mut ChaCha8Rng) -> Self {
        Self {
            amplitude: rng.gen_range(PARAM_BOX[0].0..PARAM_BOX[0].1),
            mean: rng.gen_range(PARAM_BOX[1].0..PARAM_BOX[1].1),
            sigma: rng.gen_range(PARAM_BOX[2].0..PARAM_BOX[2].1),
        }
    }
}

#[derive(Debug, Error)]
pub enum ParametricError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// The Gaussian body force f(x; p) = T·exp(−(x−m)²/(2σ²)).
pub fn gaussian_force(x: f64, p: &ParamPoint) -> f64 {
    let z = (x - p.mean) / p.sigma;
    p.amplitude * (-0.5 * z * z).exp()
}

/// Antiderivative route: φ′(x) = ∫ₓ¹ f ds in closed form through the
/// error function.
pub fn oracle_slope(x: f64, p: &ParamPoint) -> f64 {
    let scale = p.amplitude * p.sigma * (std::f64::consts::PI / 2.0).sqrt();
    let z = |t: f64| (t - p.mean) / (p.sigma * 2.0f64.sqrt());
    scale * (libm::erf(z(1.0)) - libm::erf(z(x)))
}

/// Reference solution φ(x; p) = ∫₀ˣ φ′(t) dt by adaptive quadrature of
/// the closed-form slope.
pub fn oracle_solution(x: f64, p: &ParamPoint, tol: f64) -> Result<f64, ParametricError> {
    assert!((0.0..=1.0).contains(&x), "x outside [0, 1]");
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(adaptive_simpson(|t| oracle_slope(t, p), 0.0, x, tol)?)
}

/// The parametric problem: parameter box, loss weights λ_r = 4, λ_b = 1,
/// counts N_pr·N_r = 100 000 and N_pb·N_b = 20 000, and a 4×64 network
/// over the inputs (x, T, m, σ).
pub struct ParametricProblem {
    spec: NetworkSpec,
    test_grid: Vec<(f64, ParamPoint)>,
    test_exact: Vec<f64>,
}

/// Residual and boundary sample counts of the parametric loss:
/// `n_pr` parameter draws with `n_r` interior points each, and `n_pb`
/// draws with `n_b` boundary samples each (ends drawn uniformly).
pub fn default_counts() -> CollocationCounts {
    CollocationCounts {
        n_r: 100,
        n_b: 20,
        n_pr: 1000,
        n_pb: 1000,
    }
}

pub fn default_weights() -> LossWeights {
    LossWeights::new(4.0, 1.0)
}

impl ParametricProblem {
    pub fn new() -> Result<Self, ParametricError> {
        let spec = NetworkSpec::new(4, vec![64, 64, 64, 64]).unwrap();
        let (test_grid, test_exact) = build_test_grid()?;
        Ok(Self {
            spec,
            test_grid,
            test_exact,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// Aggregate relative L2 error over the fixed test tensor grid,
    /// taken jointly over physical and parametric variables.
    pub fn test_grid_error(&self, params: &[f64]) -> f64 {
        let inputs: Vec<f64> = self
            .test_grid
            .iter()
            .flat_map(|(x, p)| [*x, p.amplitude, p.mean, p.sigma])
            .collect();
        let pred = forward_batch(&self.spec, params, &inputs);
        rel_l2(&pred, &self.test_exact)
    }
}

/// The fixed evaluation grid: 51 x-points × a 4×4×4 lattice spanning the
/// parameter box, with quadrature-exact references.
fn build_test_grid() -> Result<(Vec<(f64, ParamPoint)>, Vec<f64>), ParametricError> {
    let xs = linspace(0.0, 1.0, 51);
    let axis = |k: usize| linspace(PARAM_BOX[k].0, PARAM_BOX[k].1, 4);
    let mut grid = Vec::new();
    let mut exact = Vec::new();
    for amplitude in axis(0) {
        for mean in axis(1) {
            for sigma in axis(2) {
                let p = ParamPoint::new(amplitude, mean, sigma);
                for &x in &xs {
                    grid.push((x, p));
                    exact.push(oracle_solution(x, &p, 1e-10)?);
                }
            }
        }
    }
    Ok((grid, exact))
}

impl Problem for ParametricProblem {
    fn network_spec(&self) -> &NetworkSpec {
        &self.spec
    }

    fn sample_batch(&self, counts: &CollocationCounts, rng: &mut ChaCha8Rng) -> JetBatch {
        // Only x carries a jet seed; the parameters ride along as plain
        // inputs.
        let mut batch = JetBatch::new(4, vec![0]);
        for _ in 0..counts.n_pr {
            let p = ParamPoint::uniform(rng);
            for _ in 0..counts.n_r {
                let x = rng.gen_range(0.0..1.0);
                // r = −v_xx − f(x; p).
                batch.push(
                    &[x, p.amplitude, p.mean, p.sigma],
                    0.0,
                    &[0.0],
                    &[-1.0],
                    -gaussian_force(x, &p),
                    GroupId::Residual,
                );
            }
        }
        for _ in 0..counts.n_pb {
            let p = ParamPoint::uniform(rng);
            for _ in 0..counts.n_b {
                // Ends drawn uniformly: x = 0 carries the Dirichlet
                // term, x = 1 the Neumann term.
                if rng.gen_range(0..2) == 0 {
                    batch.push(
                        &[0.0, p.amplitude, p.mean, p.sigma],
                        1.0,
                        &[0.0],
                        &[0.0],
                        0.0,
                        GroupId::Boundary,
                    );
                } else {
                    batch.push(
                        &[1.0, p.amplitude, p.mean, p.sigma],
                        0.0,
                        &[1.0],
                        &[0.0],
                        0.0,
                        GroupId::Boundary,
                    );
                }
            }
        }
        batch
    }

    fn oracle_error(&self, params: &[f64]) -> Option<f64> {
        Some(self.test_grid_error(params))
    }
}

/// Mean squared residual and boundary losses of the parametric batch,
/// reported separately (unweighted).
pub fn parametric_losses(
    problem: &ParametricProblem,
    params: &[f64],
    batch: &JetBatch,
) -> (f64, f64) {
    let stats = crate::network::loss_only(&problem.spec, params, batch);
    (
        stats.mean_sq(GroupId::Residual),
        stats.mean_sq(GroupId::Boundary),
    )
}

#[derive(Clone, Debug)]
pub struct ParametricTrainConfig {
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub oracle_stride: usize,
}

impl ParametricTrainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            epochs: 1200,
            seed,
            learning_rate: 3e-3,
            oracle_stride: 0,
        }
    }
}

/// Outcome of one parametric training run.
pub struct ParametricRunReport {
    pub rel_l2: f64,
    pub train: TrainReport,
    pub params: Vec<f64>,
}

/// Train the parametric network and measure the aggregate test-grid
/// error.
pub fn train_parametric(
    problem: &ParametricProblem,
    config: &ParametricTrainConfig,
) -> Result<ParametricRunReport, ParametricError> {
    let mut tc = TrainConfig::new(config.epochs, config.seed, default_weights());
    tc.learning_rate = config.learning_rate;
    tc.counts = default_counts();
    tc.oracle_stride = config.oracle_stride;
    let (params, report) = train(problem, &tc)?;
    let rel_l2 = problem.test_grid_error(&params);
    Ok(ParametricRunReport {
        rel_l2,
        train: report,
        params,
    })
}

/// Persist a trained run as a checkpoint with its provenance metadata.
pub fn save_parametric_checkpoint(
    problem: &ParametricProblem,
    run: &ParametricRunReport,
    config: &ParametricTrainConfig,
    path: &Path,
) -> Result<(), ParametricError> {
    let mut metadata = BTreeMap::new();
    metadata.insert("problem".into(), "parametric1d".into());
    metadata.insert("seed".into(), config.seed.to_string());
    metadata.insert("epochs".into(), config.epochs.to_string());
    metadata.insert("learning_rate".into(), config.learning_rate.to_string());
    metadata.insert("lambda_r".into(), "4".into());
    metadata.insert("lambda_b".into(), "1".into());
    metadata.insert("rel_l2".into(), run.rel_l2.to_string());
    save_checkpoint(path, &problem.spec, &run.params, &metadata)?;
    Ok(())
}

/// Load a checkpoint and verify it carries the parametric architecture.
pub fn load_parametric_checkpoint(path: &Path) -> Result<Checkpoint, ParametricError> {
    let checkpoint = load_checkpoint(path)?;
    let expected = NetworkSpec::new(4, vec![64, 64, 64, 64]).unwrap();
    checkpoint.expect_spec(&expected)?;
    Ok(checkpoint)
}

/// Batch prediction φ(x_i; p) by one forward pass per point, plus a flag
/// marking parameter extrapolation outside the training box (the values
/// are still returned).
pub fn predict(checkpoint: &Checkpoint, xs: &[f64], p: &ParamPoint) -> (Vec<f64>, bool) {
    let inputs: Vec<f64> = xs
        .iter()
        .flat_map(|&x| [x, p.amplitude, p.mean, p.sigma])
        .collect();
    (
        forward_batch(&checkpoint.spec, &checkpoint.params, &inputs),
        !p.in_box(),
    )
}

/// Nine random parameter sets (three groups of three) with predictions
/// and references over a dense x grid, written as
/// `group,set,T,m,sigma,x,phi_pred,phi_exact`.
pub fn write_parameter_curves_csv(
    checkpoint: &Checkpoint,
    seed: u64,
    path: &Path,
) -> Result<(), ParametricError> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = linspace(0.0, 1.0, 101);
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "group,set,T,m,sigma,x,phi_pred,phi_exact")?;
    for group in 0..3 {
        for set in 0..3 {
            let p = ParamPoint::uniform(&mut rng);
            let (pred, _) = predict(checkpoint, &xs, &p);
            for (x, value) in xs.iter().zip(&pred) {
                let exact = oracle_solution(*x, &p, 1e-10)?;
                writeln!(
                    file,
                    "{group},{set},{},{},{},{x},{value},{exact}",
                    p.amplitude, p.mean, p.sigma
                )?;
            }
        }
    }
    Ok(())
}
