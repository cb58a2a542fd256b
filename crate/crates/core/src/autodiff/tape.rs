//! Reverse-mode accumulation over the closed scalar operation set.
//!
//! A [`Tape`] records every operation applied to its [`Var`] handles and
//! replays them backwards to produce exact gradients with respect to the
//! registered inputs. Because [`Var`] implements [`Scalar`], whole jet
//! computations (and therefore PDE residuals containing second spatial
//! derivatives) can run on the tape unchanged, yielding parameter
//! gradients through them.

use std::cell::RefCell;

use super::jet::Scalar;

#[derive(Clone, Copy, Debug)]
enum Node {
    Input,
    Const,
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Neg(u32),
    Scale(u32, f64),
    Shift(u32),
    Tanh(u32),
    Exp(u32),
    Recip(u32),
}

/// Recording context. Values are evaluated eagerly as operations are
/// pushed; the backward sweep runs over the recorded order in reverse.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    values: RefCell<Vec<f64>>,
    inputs: RefCell<Vec<u32>>,
}

/// Handle to one scalar on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: u32,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&self, node: Node, value: f64) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len() as u32;
        nodes.push(node);
        self.values.borrow_mut().push(value);
        id
    }

    /// Register a differentiation target. Gradients come back in
    /// registration order.
    pub fn input(&self, value: f64) -> Var<'_> {
        let id = self.push(Node::Input, value);
        self.inputs.borrow_mut().push(id);
        Var { tape: self, id }
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        let id = self.push(Node::Const, value);
        Var { tape: self, id }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Value of `output` and its gradient with respect to every input, by
    /// one reverse sweep.
    pub fn gradient(&self, output: Var<'_>) -> (f64, Vec<f64>) {
        assert!(std::ptr::eq(output.tape, self), "var from another tape");
        let nodes = self.nodes.borrow();
        let values = self.values.borrow();
        let mut adjoint = vec![0.0f64; nodes.len()];
        adjoint[output.id as usize] = 1.0;

        for idx in (0..nodes.len()).rev() {
            let bar = adjoint[idx];
            if bar == 0.0 {
                continue;
            }
            match nodes[idx] {
                Node::Input | Node::Const => {}
                Node::Add(a, b) => {
                    adjoint[a as usize] += bar;
                    adjoint[b as usize] += bar;
                }
                Node::Sub(a, b) => {
                    adjoint[a as usize] += bar;
                    adjoint[b as usize] -= bar;
                }
                Node::Mul(a, b) => {
                    adjoint[a as usize] += bar * values[b as usize];
                    adjoint[b as usize] += bar * values[a as usize];
                }
                Node::Neg(a) => adjoint[a as usize] -= bar,
                Node::Scale(a, c) => adjoint[a as usize] += bar * c,
                Node::Shift(a) => adjoint[a as usize] += bar,
                Node::Tanh(a) => {
                    let t = values[idx];
                    adjoint[a as usize] += bar * (1.0 - t * t);
                }
                Node::Exp(a) => adjoint[a as usize] += bar * values[idx],
                Node::Recip(a) => {
                    let r = values[idx];
                    adjoint[a as usize] -= bar * r * r;
                }
            }
        }

        let grad = self
            .inputs
            .borrow()
            .iter()
            .map(|&id| adjoint[id as usize])
            .collect();
        (values[output.id as usize], grad)
    }
}

impl<'t> Var<'t> {
    pub fn value(self) -> f64 {
        self.tape.values.borrow()[self.id as usize]
    }

    fn val(self) -> f64 {
        self.value()
    }
}

impl<'t> Scalar for Var<'t> {
    fn add(self, rhs: Self) -> Self {
        let v = self.val() + rhs.val();
        Var {
            tape: self.tape,
            id: self.tape.push(Node::Add(self.id, rhs.id), v),
        }
    }
    fn sub(self, rhs: Self) -> Self {
        let v = self.val() - rhs.val();
        Var {
            tape: self.tape,
            id: self.tape.push(Node::Sub(self.id, rhs.id), v),
        }
    }
    fn mul(self, rhs: Self) -> Self {
        let v = self.val() * rhs.val();
        Var {
            tape: self.tape,
            id: self.tape.push(Node::Mul(self.id, rhs.id), v),
        }
    }
    fn neg(self) -> Self {
        let v = -self.val();
        Var {
            tape: self.tape,
            id: self.tape.push(Node::Neg(self.id), v),
        }
    }
    fn scale(self, c: f64) -> Self {
        let v = self.val() * c;
        Var {
            tape: self.tape,
            id: self.tape.push(Node::Scale(self.id, c), v),
        }
    }
    fn shift(self, c: f64) -> Self {
        let v = self.val() + c;
        Var {
            tape: self.tape,
            id: self.tape.push(Node::Shift(self.id), v),
        }
    }
    fn tanh(self) -> Self {
        let v = self.val().tanh();
        Var {
            tape: self.tape,
            id: self.tape.push(Node::Tanh(self.id), v),
        }
    }
    fn exp(self) -> Self {
        let v = self.val().exp();
        Var {
            tape: self.tape,
            id: self.tape.push(Node::Exp(self.id), v),
        }
    }
    fn recip(self) -> Self {
        let v = 1.0 / self.val();
        Var {
            tape: self.tape,
            id: self.tape.push(Node::Recip(self.id), v),
        }
    }
    fn zero_like(self) -> Self {
        self.tape.constant(0.0)
    }
}

impl<'t> std::fmt::Debug for Var<'t> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var({} = {})", self.id, self.value())
    }
}

impl<'t> std::ops::Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Var<'t> {
        Scalar::add(self, rhs)
    }
}

impl<'t> std::ops::Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Var<'t> {
        Scalar::sub(self, rhs)
    }
}

impl<'t> std::ops::Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Var<'t> {
        Scalar::mul(self, rhs)
    }
}

impl<'t> std::ops::Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        Scalar::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::super::jet::{jet_mul, jet_tanh, Jet2};
    use super::*;

    #[test]
    fn quadratic_gradient() {
        let tape = Tape::new();
        let a = tape.input(1.0);
        let b = tape.input(-2.0);
        let loss = a * a + b * b;
        let (value, grad) = tape.gradient(loss);
        assert_eq!(value, 5.0);
        assert_eq!(grad, vec![2.0, -4.0]);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let tape = Tape::new();
        let _a = tape.input(3.0);
        let _b = tape.input(7.0);
        let loss = tape.constant(42.0);
        let (value, grad) = tape.gradient(loss);
        assert_eq!(value, 42.0);
        assert_eq!(grad, vec![0.0, 0.0]);
    }

    #[test]
    fn elementary_rules_match_finite_differences() {
        let check = |f: &dyn Fn(Var<'_>) -> Var<'_>, x0: f64| {
            let tape = Tape::new();
            let x = tape.input(x0);
            let (_, grad) = tape.gradient(f(x));

            let eval = |x0: f64| {
                let tape = Tape::new();
                let x = tape.input(x0);
                f(x).value()
            };
            let h = 1e-5;
            let fd = (eval(x0 + h) - eval(x0 - h)) / (2.0 * h);
            assert!(
                (grad[0] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "grad {} vs fd {}",
                grad[0],
                fd
            );
        };

        check(&|x| x.tanh(), 0.4);
        check(&|x| x.exp(), -0.7);
        check(&|x| x.recip(), 1.3);
        check(&|x| x.scale(2.5).shift(1.0), 0.9);
        check(&|x| (x * x).tanh().exp(), 0.6);
        check(&|x| x.recip().sub(x.mul(x)), 0.8);
    }

    /// Jets evaluated on the tape differentiate through second spatial
    /// derivatives: here d/dw of u_xx for u = tanh(w·x) at fixed x.
    #[test]
    fn gradient_through_jet_second_derivative() {
        let x0 = 0.7;
        let u_xx = |w: f64| {
            // Analytic: u = tanh(wx), u_xx = -2 w² tanh(wx) sech²(wx).
            let t = (w * x0).tanh();
            -2.0 * w * w * t * (1.0 - t * t)
        };

        let w0 = 1.3;
        let tape = Tape::new();
        let w = tape.input(w0);
        let x = Jet2::variable(tape.constant(x0), 0, 1);
        let u = jet_tanh(&jet_mul(&Jet2::constant(w, 1), &x));
        let (value, grad) = tape.gradient(u.d2()[0]);

        assert!((value - u_xx(w0)).abs() < 1e-12);
        let h = 1e-6;
        let fd = (u_xx(w0 + h) - u_xx(w0 - h)) / (2.0 * h);
        assert!((grad[0] - fd).abs() < 1e-7 * fd.abs().max(1.0));
    }
}
