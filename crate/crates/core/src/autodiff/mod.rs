//! Exact derivatives for the fixed operation set the loss functions need:
//! forward jet propagation for spatial derivatives (values, gradients and
//! Laplacian diagonals) and reverse accumulation for parameter gradients.
//!
//! The operation set is closed — affine combinations, tanh, multiply,
//! exponential, reciprocal and constants — and enforced by the
//! [`Scalar`] trait: anything outside it cannot be written down. All
//! arithmetic is f64; second-derivative residuals are too precision
//! sensitive for anything less.

mod jet;
mod tape;

pub use jet::{
    jet_add, jet_affine, jet_exp, jet_mul, jet_recip, jet_scale, jet_shift, jet_sigmoid, jet_sub,
    jet_tanh, Jet2, Scalar,
};
pub use tape::{Tape, Var};

use thiserror::Error;

/// Gradient of a scalar loss with respect to a flat parameter vector, in
/// the same order and length as that vector.
pub type ParamGradient = Vec<f64>;

#[derive(Debug, Error)]
pub enum AutodiffError {
    /// The loss (or some gradient entry) came out NaN or infinite.
    #[error("non-finite {quantity} during gradient evaluation")]
    NonFinite { quantity: &'static str },
}

/// Evaluate `loss` at `params` and return its value together with the
/// exact gradient, by reverse accumulation over the recorded operations.
///
/// The evaluator receives the tape and one [`Var`] per parameter; it must
/// build the loss from those using the closed operation set (jets over
/// tape scalars are fine). Non-finite results are reported as errors
/// rather than silently propagated into an optimizer.
pub fn param_gradient<F>(params: &[f64], loss: F) -> Result<(f64, ParamGradient), AutodiffError>
where
    F: for<'t> FnOnce(&'t Tape, &[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = params.iter().map(|&p| tape.input(p)).collect();
    let output = loss(&tape, &vars);
    let (value, grad) = tape.gradient(output);
    if !value.is_finite() {
        return Err(AutodiffError::NonFinite { quantity: "loss" });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(AutodiffError::NonFinite {
            quantity: "gradient",
        });
    }
    Ok((value, grad))
}
