//! Second-order jets: a value together with first and pure second
//! derivatives with respect to a set of seeded inputs.
//!
//! Only the diagonal of the Hessian is carried (no mixed partials): every
//! residual built in this crate needs at most a 1D second derivative or a
//! Laplacian, so the jet stays O(d) wide instead of O(d²).

/// The closed set of scalar operations jets and tapes are built from.
///
/// Implemented for `f64` (plain evaluation) and for [`super::Var`]
/// (reverse-mode recording). Anything outside this set simply cannot be
/// expressed, which keeps the derivative rules auditable.
pub trait Scalar: Copy + std::fmt::Debug {
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn neg(self) -> Self;
    /// `self * c` for a plain constant `c`.
    fn scale(self, c: f64) -> Self;
    /// `self + c` for a plain constant `c`.
    fn shift(self, c: f64) -> Self;
    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn recip(self) -> Self;
    /// A zero in the same evaluation context as `self`.
    fn zero_like(self) -> Self;
}

impl Scalar for f64 {
    #[inline(always)]
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    #[inline(always)]
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    #[inline(always)]
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    #[inline(always)]
    fn neg(self) -> Self {
        -self
    }
    #[inline(always)]
    fn scale(self, c: f64) -> Self {
        self * c
    }
    #[inline(always)]
    fn shift(self, c: f64) -> Self {
        self + c
    }
    #[inline(always)]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline(always)]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline(always)]
    fn recip(self) -> Self {
        1.0 / self
    }
    #[inline(always)]
    fn zero_like(self) -> Self {
        0.0
    }
}

/// Value, gradient and pure second derivatives of a scalar quantity with
/// respect to `dim` seeded inputs.
///
/// `d1[i]` is ∂f/∂x_i and `d2[i]` is ∂²f/∂x_i²; mixed partials are not
/// tracked. All three pieces stay consistent through every operation.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2<S: Scalar = f64> {
    value: S,
    d1: Vec<S>,
    d2: Vec<S>,
}

impl<S: Scalar> Jet2<S> {
    /// A constant: zero first and second derivatives.
    pub fn constant(value: S, dim: usize) -> Self {
        Self {
            value,
            d1: vec![value.zero_like(); dim],
            d2: vec![value.zero_like(); dim],
        }
    }

    /// Seed input coordinate `index`: d1 becomes the unit vector e_index.
    ///
    /// # Panics
    /// Panics if `index >= dim`.
    pub fn variable(value: S, index: usize, dim: usize) -> Self {
        assert!(index < dim, "seed index {index} out of range for dim {dim}");
        let mut jet = Self::constant(value, dim);
        jet.d1[index] = value.zero_like().shift(1.0);
        jet
    }

    pub fn value(&self) -> S {
        self.value
    }

    pub fn d1(&self) -> &[S] {
        &self.d1
    }

    pub fn d2(&self) -> &[S] {
        &self.d2
    }

    pub fn dim(&self) -> usize {
        self.d1.len()
    }

    fn assert_same_dim(&self, other: &Self) {
        assert_eq!(
            self.dim(),
            other.dim(),
            "jet dimension mismatch: {} vs {}",
            self.dim(),
            other.dim()
        );
    }
}

/// Linear combination `Σ w_k · input_k + b`.
///
/// Weights live in the same scalar context as the jets so that, on a tape,
/// they can be differentiated as parameters; they are constants with respect
/// to the seeded inputs, so the derivative components combine linearly.
///
/// # Panics
/// Panics if `weights` and `inputs` differ in length or the input jets do
/// not share one dimension.
pub fn jet_affine<S: Scalar>(weights: &[S], bias: S, inputs: &[Jet2<S>]) -> Jet2<S> {
    assert_eq!(
        weights.len(),
        inputs.len(),
        "affine arity mismatch: {} weights vs {} inputs",
        weights.len(),
        inputs.len()
    );
    assert!(!inputs.is_empty(), "affine over an empty input list");
    let dim = inputs[0].dim();
    for jet in inputs {
        inputs[0].assert_same_dim(jet);
    }

    let mut value = bias;
    let mut d1 = vec![bias.zero_like(); dim];
    let mut d2 = vec![bias.zero_like(); dim];
    for (&w, jet) in weights.iter().zip(inputs) {
        value = value.add(w.mul(jet.value));
        for i in 0..dim {
            d1[i] = d1[i].add(w.mul(jet.d1[i]));
            d2[i] = d2[i].add(w.mul(jet.d2[i]));
        }
    }
    Jet2 { value, d1, d2 }
}

/// Hyperbolic tangent with exact first/second derivative propagation.
pub fn jet_tanh<S: Scalar>(a: &Jet2<S>) -> Jet2<S> {
    let t = a.value.tanh();
    // sech² = 1 - tanh²
    let s = t.mul(t).neg().shift(1.0);
    let two_ts = t.mul(s).scale(2.0);
    let d1 = a.d1.iter().map(|&g| s.mul(g)).collect();
    let d2 = a
        .d2
        .iter()
        .zip(&a.d1)
        .map(|(&h, &g)| s.mul(h).sub(two_ts.mul(g).mul(g)))
        .collect();
    Jet2 {
        value: t,
        d1,
        d2,
    }
}

/// Product rule, including the `2·a'·b'` second-order cross term.
pub fn jet_mul<S: Scalar>(a: &Jet2<S>, b: &Jet2<S>) -> Jet2<S> {
    a.assert_same_dim(b);
    let value = a.value.mul(b.value);
    let d1 = a
        .d1
        .iter()
        .zip(&b.d1)
        .map(|(&ga, &gb)| ga.mul(b.value).add(a.value.mul(gb)))
        .collect();
    let d2 = (0..a.dim())
        .map(|i| {
            a.d2[i]
                .mul(b.value)
                .add(a.d1[i].mul(b.d1[i]).scale(2.0))
                .add(a.value.mul(b.d2[i]))
        })
        .collect();
    Jet2 { value, d1, d2 }
}

/// Exponential: d1 = e·a', d2 = e·(a'' + a'²).
pub fn jet_exp<S: Scalar>(a: &Jet2<S>) -> Jet2<S> {
    let e = a.value.exp();
    let d1 = a.d1.iter().map(|&g| e.mul(g)).collect();
    let d2 = a
        .d2
        .iter()
        .zip(&a.d1)
        .map(|(&h, &g)| e.mul(h.add(g.mul(g))))
        .collect();
    Jet2 {
        value: e,
        d1,
        d2,
    }
}

/// Reciprocal: d1 = -r²·a', d2 = -r²·a'' + 2r³·a'² with r = 1/a.
pub fn jet_recip<S: Scalar>(a: &Jet2<S>) -> Jet2<S> {
    let r = a.value.recip();
    let r2 = r.mul(r);
    let two_r3 = r2.mul(r).scale(2.0);
    let d1 = a.d1.iter().map(|&g| r2.mul(g).neg()).collect();
    let d2 = a
        .d2
        .iter()
        .zip(&a.d1)
        .map(|(&h, &g)| two_r3.mul(g).mul(g).sub(r2.mul(h)))
        .collect();
    Jet2 {
        value: r,
        d1,
        d2,
    }
}

/// `c * a` for a plain constant.
pub fn jet_scale<S: Scalar>(a: &Jet2<S>, c: f64) -> Jet2<S> {
    Jet2 {
        value: a.value.scale(c),
        d1: a.d1.iter().map(|&g| g.scale(c)).collect(),
        d2: a.d2.iter().map(|&h| h.scale(c)).collect(),
    }
}

/// `a + c` for a plain constant.
pub fn jet_shift<S: Scalar>(a: &Jet2<S>, c: f64) -> Jet2<S> {
    Jet2 {
        value: a.value.shift(c),
        d1: a.d1.clone(),
        d2: a.d2.clone(),
    }
}

pub fn jet_add<S: Scalar>(a: &Jet2<S>, b: &Jet2<S>) -> Jet2<S> {
    a.assert_same_dim(b);
    Jet2 {
        value: a.value.add(b.value),
        d1: a.d1.iter().zip(&b.d1).map(|(&x, &y)| x.add(y)).collect(),
        d2: a.d2.iter().zip(&b.d2).map(|(&x, &y)| x.add(y)).collect(),
    }
}

pub fn jet_sub<S: Scalar>(a: &Jet2<S>, b: &Jet2<S>) -> Jet2<S> {
    a.assert_same_dim(b);
    Jet2 {
        value: a.value.sub(b.value),
        d1: a.d1.iter().zip(&b.d1).map(|(&x, &y)| x.sub(y)).collect(),
        d2: a.d2.iter().zip(&b.d2).map(|(&x, &y)| x.sub(y)).collect(),
    }
}

/// Numerically stable logistic sigmoid as a jet: 1 / (1 + exp(-a)).
///
/// Large-magnitude arguments (the shaft profile evaluates sigmoid(±75))
/// must not overflow, so the exponential is always taken of a negative
/// quantity. Derivatives follow from sigmoid' = σ(1-σ) by composition of
/// the closed operation set.
pub fn jet_sigmoid<S: Scalar>(a: &Jet2<S>) -> Jet2<S> {
    // σ(x) = 1/(1+exp(-x)); the composed jet rules stay finite because
    // exp(-x) is evaluated only where it does not overflow. Rather than
    // branch on the sign (jets carry no comparisons), rewrite via tanh:
    // σ(x) = (1 + tanh(x/2)) / 2, which is stable for all x.
    let half = jet_scale(a, 0.5);
    jet_shift(&jet_scale(&jet_tanh(&half), 0.5), 0.5)
}

impl Jet2<f64> {
    /// True when the value and every derivative entry is finite.
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.d1.iter().all(|g| g.is_finite())
            && self.d2.iter().all(|h| h.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x_jet(v: f64) -> Jet2 {
        Jet2::variable(v, 0, 1)
    }

    /// Central differences of a scalar function, used as the independent
    /// oracle for every chain rule below.
    fn fd_d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    fn fd_d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    }

    fn assert_close(got: f64, want: f64, rel: f64) {
        let tol = rel * want.abs().max(got.abs()).max(1e-3);
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (tol {tol})"
        );
    }

    #[test]
    fn seeding_yields_unit_gradient() {
        let jet = Jet2::variable(0.3, 1, 2);
        assert_eq!(jet.value(), 0.3);
        assert_eq!(jet.d1(), &[0.0, 1.0]);
        assert_eq!(jet.d2(), &[0.0, 0.0]);
    }

    #[test]
    fn affine_matches_hand_examples() {
        // W=[2], b=1 applied to x seeded at 3.
        let out = jet_affine(&[2.0], 1.0, &[x_jet(3.0)]);
        assert_eq!(out.value(), 7.0);
        assert_eq!(out.d1(), &[2.0]);
        assert_eq!(out.d2(), &[0.0]);

        // Zero weights swallow any input.
        let x = Jet2::variable(0.3, 0, 2);
        let y = Jet2::variable(0.4, 1, 2);
        let constant = jet_affine(&[0.0, 0.0], 5.0, &[x.clone(), y.clone()]);
        assert_eq!(constant.value(), 5.0);
        assert_eq!(constant.d1(), &[0.0, 0.0]);

        // Sum of coordinates at (0.3, 0.4).
        let sum = jet_affine(&[1.0, 1.0], 0.0, &[x, y]);
        assert!((sum.value() - 0.7).abs() < 1e-15);
        assert_eq!(sum.d1(), &[1.0, 1.0]);
        assert_eq!(sum.d2(), &[0.0, 0.0]);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn affine_rejects_mixed_dims() {
        let a = Jet2::variable(1.0, 0, 1);
        let b = Jet2::variable(1.0, 0, 2);
        jet_affine(&[1.0, 1.0], 0.0, &[a, b]);
    }

    #[test]
    fn tanh_at_zero_is_identity_to_second_order() {
        let out = jet_tanh(&x_jet(0.0));
        assert_eq!(out.value(), 0.0);
        assert_eq!(out.d1(), &[1.0]);
        assert_eq!(out.d2(), &[0.0]);
    }

    #[test]
    fn tanh_constant_propagates() {
        let c = Jet2::constant(0.8, 1);
        let out = jet_tanh(&c);
        assert_eq!(out.value(), 0.8f64.tanh());
        assert_eq!(out.d1(), &[0.0]);
        assert_eq!(out.d2(), &[0.0]);
    }

    #[test]
    fn tanh_matches_finite_differences() {
        let out = jet_tanh(&x_jet(0.5));
        assert_close(out.value(), 0.5f64.tanh(), 1e-12);
        assert_close(out.d1()[0], fd_d1(f64::tanh, 0.5, 1e-4), 1e-6);
        assert_close(out.d2()[0], fd_d2(f64::tanh, 0.5, 1e-4), 1e-6);
    }

    #[test]
    fn mul_square_has_constant_second_derivative() {
        let x = x_jet(3.0);
        let sq = jet_mul(&x, &x);
        assert_eq!(sq.value(), 9.0);
        assert_eq!(sq.d1(), &[6.0]);
        assert_eq!(sq.d2(), &[2.0]);
    }

    #[test]
    fn mul_by_constant_scales() {
        let a = x_jet(2.0);
        let c = Jet2::constant(5.0, 1);
        let out = jet_mul(&a, &c);
        assert_eq!(out.value(), 10.0);
        assert_eq!(out.d1(), &[5.0]);
        assert_eq!(out.d2(), &[0.0]);
    }

    #[test]
    fn exp_at_zero() {
        let out = jet_exp(&x_jet(0.0));
        assert_eq!(out.value(), 1.0);
        assert_eq!(out.d1(), &[1.0]);
        assert_eq!(out.d2(), &[1.0]);
    }

    #[test]
    fn recip_matches_finite_differences() {
        let out = jet_recip(&x_jet(1.7));
        assert_close(out.value(), 1.0 / 1.7, 1e-12);
        assert_close(out.d1()[0], fd_d1(|x| 1.0 / x, 1.7, 1e-5), 1e-6);
        assert_close(out.d2()[0], fd_d2(|x| 1.0 / x, 1.7, 1e-4), 1e-6);
    }

    #[test]
    fn sigmoid_saturates_without_overflow() {
        let lo = jet_sigmoid(&x_jet(-75.0));
        let hi = jet_sigmoid(&x_jet(75.0));
        assert!(lo.is_finite() && hi.is_finite());
        assert!(lo.value() < 1e-30);
        assert!((hi.value() - 1.0).abs() < 1e-15);
        // Derivatives vanish in saturation.
        assert!(lo.d1()[0].abs() < 1e-30);
        assert!(hi.d1()[0].abs() < 1e-30);
    }

    #[test]
    fn sigmoid_matches_finite_differences() {
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        for &x in &[-2.0, -0.3, 0.0, 0.9, 3.5] {
            let out = jet_sigmoid(&x_jet(x));
            assert_close(out.value(), sig(x), 1e-12);
            assert_close(out.d1()[0], fd_d1(sig, x, 1e-4), 1e-5);
            assert_close(out.d2()[0], fd_d2(sig, x, 1e-3), 1e-4);
        }
    }

    /// A composite covering the whole operation set:
    /// f(x) = exp(tanh(x)·x) + 1/(2 + x²), checked against central
    /// differences per the module contract.
    #[test]
    fn composite_against_finite_differences() {
        let f = |x: f64| (x.tanh() * x).exp() + 1.0 / (2.0 + x * x);
        for &x in &[-1.3, -0.4, 0.0, 0.7, 1.9] {
            let xj = x_jet(x);
            let left = jet_exp(&jet_mul(&jet_tanh(&xj), &xj));
            let right = jet_recip(&jet_shift(&jet_mul(&xj, &xj), 2.0));
            let out = jet_add(&left, &right);
            assert_close(out.value(), f(x), 1e-12);
            assert_close(out.d1()[0], fd_d1(f, x, 1e-4), 1e-5);
            assert_close(out.d2()[0], fd_d2(f, x, 1e-4), 2e-5);
        }
    }

    #[test]
    fn two_dim_partial_derivatives_are_independent() {
        // f(x, y) = x·y² at (2, 3): fx = y² = 9, fy = 2xy = 12,
        // fxx = 0, fyy = 2x = 4.
        let x = Jet2::variable(2.0, 0, 2);
        let y = Jet2::variable(3.0, 1, 2);
        let out = jet_mul(&x, &jet_mul(&y, &y));
        assert_eq!(out.value(), 18.0);
        assert_eq!(out.d1(), &[9.0, 12.0]);
        assert_eq!(out.d2(), &[0.0, 4.0]);
    }

    proptest! {
        /// Dimension is preserved and entries stay finite through a chain
        /// of every supported operation.
        #[test]
        fn chains_preserve_dim_and_finiteness(
            v in -3.0f64..3.0,
            w in -2.0f64..2.0,
            dim in 1usize..5,
            seed in 0usize..4,
        ) {
            let seed = seed.min(dim - 1);
            let x = Jet2::variable(v, seed, dim);
            let a = jet_tanh(&jet_affine(&[w, 0.5], 0.1, &[x.clone(), x.clone()]));
            let b = jet_exp(&jet_scale(&a, 0.5));
            let c = jet_recip(&jet_shift(&jet_mul(&b, &b), 1.5));
            let out = jet_sub(&jet_add(&c, &a), &x);
            prop_assert_eq!(out.dim(), dim);
            prop_assert!(out.is_finite());
        }
    }
}
