//! Fully connected tanh networks with a scalar output: deterministic
//! initialization, plain and jet-mode evaluation, and checkpoint files.

mod batch;
mod checkpoint;

pub use batch::{
    forward_batch, forward_jets_batch, loss_and_grad, loss_only, GroupId, JetBatch, JetOutputs,
    LossStats,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autodiff::{jet_affine, jet_tanh, Jet2, Scalar};

/// Network activation. Only tanh is supported; the enum exists so
/// checkpoints record the choice explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

/// Architecture of a scalar-output MLP: input width and hidden widths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    input_dim: usize,
    hidden: Vec<usize>,
    activation: Activation,
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("input dimension must be at least 1")]
    ZeroInputDim,
    #[error("at least one hidden layer is required")]
    NoHiddenLayer,
    #[error("hidden layer {index} has zero width")]
    ZeroWidthLayer { index: usize },
    #[error("input length {got} does not match network input dimension {expected}")]
    InputDimMismatch { expected: usize, got: usize },
    #[error("parameter vector length {got} does not match spec ({expected})")]
    ParamLenMismatch { expected: usize, got: usize },
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>) -> Result<Self, NetworkError> {
        if input_dim == 0 {
            return Err(NetworkError::ZeroInputDim);
        }
        if hidden.is_empty() {
            return Err(NetworkError::NoHiddenLayer);
        }
        if let Some(index) = hidden.iter().position(|&w| w == 0) {
            return Err(NetworkError::ZeroWidthLayer { index });
        }
        Ok(Self {
            input_dim,
            hidden,
            activation: Activation::Tanh,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Layer widths from input to the scalar output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden);
        w.push(1);
        w
    }

    /// Number of affine layers (hidden layers plus the output layer).
    pub fn n_layers(&self) -> usize {
        self.hidden.len() + 1
    }

    /// Total parameter count: Σ (fan_in·fan_out + fan_out) over layers.
    pub fn param_count(&self) -> usize {
        let widths = self.widths();
        widths
            .windows(2)
            .map(|pair| pair[0] * pair[1] + pair[1])
            .sum()
    }

    /// Offsets of the weight and bias blocks of `layer` in the flat
    /// parameter vector. Layout is `[W₀, b₀, W₁, b₁, …]` with each weight
    /// block row-major (rows are output neurons).
    pub fn layer_offsets(&self, layer: usize) -> (usize, usize) {
        let widths = self.widths();
        assert!(layer + 1 < widths.len(), "layer index out of range");
        let mut off = 0;
        for l in 0..layer {
            off += widths[l] * widths[l + 1] + widths[l + 1];
        }
        (off, off + widths[layer] * widths[layer + 1])
    }
}

/// Flat parameter vector for a [`NetworkSpec`].
pub type NetworkParams = Vec<f64>;

/// Glorot-uniform weights, zero biases, fully determined by `seed`.
///
/// Weights are drawn per layer from uniform(−√(6/(fan_in+fan_out)), +…)
/// in row-major order; the generator is a seeded ChaCha stream so the
/// same `(spec, seed)` always produces the same vector.
pub fn init_params(spec: &NetworkSpec, seed: u64) -> NetworkParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let widths = spec.widths();
    let mut params = Vec::with_capacity(spec.param_count());
    for pair in widths.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        for _ in 0..fan_in * fan_out {
            params.push(dist.sample(&mut rng));
        }
        params.extend(std::iter::repeat(0.0).take(fan_out));
    }
    params
}

fn check_lengths(spec: &NetworkSpec, params: &[f64], input_len: usize) -> Result<(), NetworkError> {
    if params.len() != spec.param_count() {
        return Err(NetworkError::ParamLenMismatch {
            expected: spec.param_count(),
            got: params.len(),
        });
    }
    if input_len != spec.input_dim {
        return Err(NetworkError::InputDimMismatch {
            expected: spec.input_dim,
            got: input_len,
        });
    }
    Ok(())
}

/// Plain forward evaluation of the network at `x`.
pub fn forward(spec: &NetworkSpec, params: &[f64], x: &[f64]) -> Result<f64, NetworkError> {
    check_lengths(spec, params, x.len())?;
    let widths = spec.widths();
    let mut activ = x.to_vec();
    let mut off = 0;
    for (layer, pair) in widths.windows(2).enumerate() {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let weights = &params[off..off + fan_in * fan_out];
        let biases = &params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
        off += fan_in * fan_out + fan_out;

        let mut next = Vec::with_capacity(fan_out);
        for o in 0..fan_out {
            let mut acc = biases[o];
            let row = &weights[o * fan_in..(o + 1) * fan_in];
            for (w, a) in row.iter().zip(&activ) {
                acc += w * a;
            }
            next.push(if layer + 2 == widths.len() {
                acc
            } else {
                acc.tanh()
            });
        }
        activ = next;
    }
    Ok(activ[0])
}

/// Jet-mode forward pass: propagates the given input jets through the
/// network and returns the scalar output with its first and pure second
/// derivatives with respect to whatever the caller seeded.
///
/// Generic over the scalar type so the same code runs on plain values and
/// on a recording tape (for parameter gradients through the jets).
pub fn forward_jets_generic<S: Scalar>(
    spec: &NetworkSpec,
    params: &[S],
    inputs: &[Jet2<S>],
) -> Jet2<S> {
    assert_eq!(params.len(), spec.param_count(), "parameter length mismatch");
    assert_eq!(inputs.len(), spec.input_dim, "input arity mismatch");
    let widths = spec.widths();
    let mut activ: Vec<Jet2<S>> = inputs.to_vec();
    let mut off = 0;
    for (layer, pair) in widths.windows(2).enumerate() {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let weights = &params[off..off + fan_in * fan_out];
        let biases = &params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
        off += fan_in * fan_out + fan_out;

        let mut next = Vec::with_capacity(fan_out);
        for o in 0..fan_out {
            let row = &weights[o * fan_in..(o + 1) * fan_in];
            let z = jet_affine(row, biases[o], &activ);
            next.push(if layer + 2 == widths.len() {
                z
            } else {
                jet_tanh(&z)
            });
        }
        activ = next;
    }
    activ.swap_remove(0)
}

/// Jet-mode evaluation with every input coordinate seeded: returns
/// (u, ∇u, diag ∂²u/∂x_i²) at `x`.
pub fn forward_jets(spec: &NetworkSpec, params: &[f64], x: &[f64]) -> Result<Jet2, NetworkError> {
    check_lengths(spec, params, x.len())?;
    let dim = x.len();
    let inputs: Vec<Jet2> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet2::variable(v, i, dim))
        .collect();
    Ok(forward_jets_generic(spec, params, &inputs))
}
