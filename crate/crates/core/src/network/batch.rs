//! Batched jet evaluation and the reverse sweep that drives training.
//!
//! Collocation losses here are weighted means of squared residuals, where
//! each residual is an affine combination of the network output jet at one
//! point (value, first derivatives, pure second derivatives) plus a
//! point-dependent constant. That covers every residual and boundary term
//! in this crate: Poisson interior residuals, Dirichlet and Neumann
//! mismatches, and the variable-coefficient 1D forms.
//!
//! Activations are stored plane-major (one plane per jet component) and
//! point-contiguous, so each layer is a handful of dense matrix products
//! over the point dimension. Chunks are processed independently and
//! reduced in index order, which keeps results bit-identical no matter
//! how many worker threads run.

use rayon::prelude::*;

use super::NetworkSpec;
use crate::autodiff::ParamGradient;
use crate::numeric::pairwise_sum;

const CHUNK: usize = 512;

/// Chunk length for a batch of `n` points: a pure function of the batch
/// size (never of the worker count) so reductions group identically on
/// any machine.
fn chunk_len(n: usize) -> usize {
    n.div_ceil(8).clamp(128, CHUNK)
}

/// Which loss group a point contributes to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupId {
    Residual = 0,
    Boundary = 1,
}

/// Residual sums per group, as produced by [`loss_and_grad`].
#[derive(Clone, Copy, Debug, Default)]
pub struct LossStats {
    /// Sum of squared residuals per group (index-ordered pairwise sums).
    pub sum_sq: [f64; 2],
    /// Point counts per group.
    pub count: [usize; 2],
}

impl LossStats {
    /// Mean squared residual of a group; zero when the group is empty.
    pub fn mean_sq(&self, group: GroupId) -> f64 {
        let g = group as usize;
        if self.count[g] == 0 {
            0.0
        } else {
            self.sum_sq[g] / self.count[g] as f64
        }
    }
}

/// A batch of collocation points with, for each point, the affine form
/// that maps the output jet to the scalar residual:
/// `r = cv·u + Σₖ cd1[k]·∂u/∂x_{seed k} + Σₖ cd2[k]·∂²u/∂x²_{seed k} + c0`.
#[derive(Clone, Debug)]
pub struct JetBatch {
    input_dim: usize,
    seeds: Vec<usize>,
    inputs: Vec<f64>,
    coeff_value: Vec<f64>,
    coeff_d1: Vec<f64>,
    coeff_d2: Vec<f64>,
    constant: Vec<f64>,
    group: Vec<u8>,
    /// Per-group multiplier applied to each squared residual in the
    /// training objective (typically λ_group / n_group).
    group_weights: [f64; 2],
}

impl JetBatch {
    /// `seeds` lists the input coordinates that carry jet seeds; residual
    /// derivative coefficients refer to seed slots in this order.
    pub fn new(input_dim: usize, seeds: Vec<usize>) -> Self {
        assert!(!seeds.is_empty(), "at least one seeded coordinate");
        assert!(
            seeds.iter().all(|&s| s < input_dim),
            "seed index out of range"
        );
        Self {
            input_dim,
            seeds,
            inputs: Vec::new(),
            coeff_value: Vec::new(),
            coeff_d1: Vec::new(),
            coeff_d2: Vec::new(),
            constant: Vec::new(),
            group: Vec::new(),
            group_weights: [1.0, 1.0],
        }
    }

    pub fn set_group_weights(&mut self, residual: f64, boundary: f64) {
        self.group_weights = [residual, boundary];
    }

    pub fn group_weights(&self) -> [f64; 2] {
        self.group_weights
    }

    /// Append one point. `coeff_d1`/`coeff_d2` must match the seed count.
    pub fn push(
        &mut self,
        input: &[f64],
        coeff_value: f64,
        coeff_d1: &[f64],
        coeff_d2: &[f64],
        constant: f64,
        group: GroupId,
    ) {
        assert_eq!(input.len(), self.input_dim, "input arity");
        assert_eq!(coeff_d1.len(), self.seeds.len(), "d1 coefficient arity");
        assert_eq!(coeff_d2.len(), self.seeds.len(), "d2 coefficient arity");
        self.inputs.extend_from_slice(input);
        self.coeff_value.push(coeff_value);
        self.coeff_d1.extend_from_slice(coeff_d1);
        self.coeff_d2.extend_from_slice(coeff_d2);
        self.constant.push(constant);
        self.group.push(group as u8);
    }

    pub fn len(&self) -> usize {
        self.group.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group.is_empty()
    }

    pub fn count(&self, group: GroupId) -> usize {
        self.group.iter().filter(|&&g| g == group as u8).count()
    }

    pub fn seeds(&self) -> &[usize] {
        &self.seeds
    }
}

/// C ← alpha·A·B + beta·C for row-major slices with the given logical
/// shapes; thin safe wrapper over the blocked kernel.
#[allow(clippy::too_many_arguments)]
fn dgemm_rowmajor(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    assert!(c.len() >= m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Per-chunk working buffers, sized for `CHUNK` points: pre-activation
/// and post-activation planes for every layer, each
/// `planes × width × n` point-contiguous.
struct Workspace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    zbar: Vec<f64>,
    abar: Vec<f64>,
    grad: Vec<f64>,
}

impl Workspace {
    fn new(spec: &NetworkSpec, planes: usize, chunk: usize) -> Self {
        let widths = spec.widths();
        let max_width = *widths.iter().max().unwrap();
        Self {
            pre: (0..spec.n_layers())
                .map(|l| vec![0.0; planes * widths[l + 1] * chunk])
                .collect(),
            post: (0..=spec.n_layers())
                .map(|l| vec![0.0; planes * widths[l] * chunk])
                .collect(),
            zbar: vec![0.0; planes * max_width * chunk],
            abar: vec![0.0; planes * max_width * chunk],
            grad: vec![0.0; spec.param_count()],
        }
    }
}

/// Forward sweep over one chunk; pre-activation planes of the output
/// layer end up in `ws.pre[last]`.
fn forward_chunk(
    spec: &NetworkSpec,
    params: &[f64],
    inputs: &[f64],
    seeds: &[usize],
    range: std::ops::Range<usize>,
    ws: &mut Workspace,
) {
    let widths = spec.widths();
    let d = seeds.len();
    let planes = 1 + 2 * d;
    let n = range.len();
    let in_w = widths[0];

    let input_planes = &mut ws.post[0][..planes * in_w * n];
    input_planes.iter_mut().for_each(|v| *v = 0.0);
    for (q, p) in range.clone().enumerate() {
        for i in 0..in_w {
            input_planes[i * n + q] = inputs[p * in_w + i];
        }
    }
    for (k, &seed) in seeds.iter().enumerate() {
        input_planes[((1 + k) * in_w + seed) * n..((1 + k) * in_w + seed) * n + n]
            .iter_mut()
            .for_each(|v| *v = 1.0);
    }

    for layer in 0..spec.n_layers() {
        let (fan_in, fan_out) = (widths[layer], widths[layer + 1]);
        let (w_off, b_off) = spec.layer_offsets(layer);
        let weights = &params[w_off..w_off + fan_in * fan_out];
        let biases = &params[b_off..b_off + fan_out];

        let (head, tail) = ws.post.split_at_mut(layer + 1);
        let a = &head[layer][..planes * fan_in * n];
        let z = &mut ws.pre[layer][..planes * fan_out * n];
        for c in 0..planes {
            dgemm_rowmajor(
                fan_out,
                fan_in,
                n,
                1.0,
                weights,
                (fan_in as isize, 1),
                &a[c * fan_in * n..(c + 1) * fan_in * n],
                (n as isize, 1),
                0.0,
                &mut z[c * fan_out * n..(c + 1) * fan_out * n],
            );
        }
        for o in 0..fan_out {
            let bias = biases[o];
            z[o * n..(o + 1) * n].iter_mut().for_each(|v| *v += bias);
        }

        if layer + 1 < spec.n_layers() {
            let out = &mut tail[0][..planes * fan_out * n];
            for j in 0..fan_out * n {
                out[j] = z[j].tanh();
            }
            for k in 0..d {
                for j in 0..fan_out * n {
                    let t = out[j];
                    let s = 1.0 - t * t;
                    let g = z[(1 + k) * fan_out * n + j];
                    let h = z[(1 + d + k) * fan_out * n + j];
                    out[(1 + k) * fan_out * n + j] = s * g;
                    out[(1 + d + k) * fan_out * n + j] = s * h - ((t * s) * 2.0 * g) * g;
                }
            }
        }
    }
}

/// Residuals and objective contributions of one chunk; fills the adjoint
/// seeds for the output planes into `ws.zbar`.
fn head_chunk(
    batch: &JetBatch,
    range: std::ops::Range<usize>,
    ws: &mut Workspace,
    last_layer: usize,
    stats: &mut LossStats,
) {
    let d = batch.seeds.len();
    let n = range.len();
    let out_planes = &ws.pre[last_layer];
    let zbar = &mut ws.zbar[..(1 + 2 * d) * n];
    zbar.iter_mut().for_each(|v| *v = 0.0);
    let mut sq = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for (q, p) in range.enumerate() {
        let mut r = batch.constant[p] + batch.coeff_value[p] * out_planes[q];
        for k in 0..d {
            r += batch.coeff_d1[p * d + k] * out_planes[(1 + k) * n + q];
            r += batch.coeff_d2[p * d + k] * out_planes[(1 + d + k) * n + q];
        }
        let g = batch.group[p] as usize;
        sq[g].push(r * r);
        let scale = 2.0 * batch.group_weights[g] * r;
        zbar[q] = scale * batch.coeff_value[p];
        for k in 0..d {
            zbar[(1 + k) * n + q] = scale * batch.coeff_d1[p * d + k];
            zbar[(1 + d + k) * n + q] = scale * batch.coeff_d2[p * d + k];
        }
    }
    for g in 0..2 {
        stats.sum_sq[g] += pairwise_sum(&sq[g]);
        stats.count[g] += sq[g].len();
    }
}

/// Reverse sweep over one chunk, accumulating parameter gradients into
/// `ws.grad`. `ws.zbar` must hold the output-plane adjoints.
fn backward_chunk(spec: &NetworkSpec, params: &[f64], d: usize, n: usize, ws: &mut Workspace) {
    let widths = spec.widths();
    let planes = 1 + 2 * d;

    for layer in (0..spec.n_layers()).rev() {
        let (fan_in, fan_out) = (widths[layer], widths[layer + 1]);
        let (w_off, b_off) = spec.layer_offsets(layer);
        let weights = &params[w_off..w_off + fan_in * fan_out];
        let a = &ws.post[layer];
        let zbar = &ws.zbar[..planes * fan_out * n];

        // W̄ += Σ_planes Z̄_c · A_cᵀ and b̄ += row sums of the value plane.
        let wgrad = &mut ws.grad[w_off..w_off + fan_in * fan_out];
        for c in 0..planes {
            dgemm_rowmajor(
                fan_out,
                n,
                fan_in,
                1.0,
                &zbar[c * fan_out * n..(c + 1) * fan_out * n],
                (n as isize, 1),
                &a[c * fan_in * n..(c + 1) * fan_in * n],
                (1, n as isize),
                1.0,
                wgrad,
            );
        }
        for o in 0..fan_out {
            ws.grad[b_off + o] += zbar[o * n..(o + 1) * n].iter().sum::<f64>();
        }

        if layer == 0 {
            break;
        }

        // ā_c = Wᵀ · Z̄_c for the post-activation planes below.
        let abar = &mut ws.abar[..planes * fan_in * n];
        for c in 0..planes {
            dgemm_rowmajor(
                fan_in,
                fan_out,
                n,
                1.0,
                weights,
                (1, fan_in as isize),
                &zbar[c * fan_out * n..(c + 1) * fan_out * n],
                (n as isize, 1),
                0.0,
                &mut abar[c * fan_in * n..(c + 1) * fan_in * n],
            );
        }

        // Through the tanh: adjoints of the pre-activation planes below.
        let z_prev = &ws.pre[layer - 1];
        let t_plane = &ws.post[layer][..fan_in * n];
        let zbar_prev = &mut ws.zbar[..planes * fan_in * n];
        for j in 0..fan_in * n {
            let t = t_plane[j];
            let s = 1.0 - t * t;
            let ts2 = 2.0 * t * s;
            let mut acc0 = abar[j] * s;
            for k in 0..d {
                let g = z_prev[(1 + k) * fan_in * n + j];
                let h = z_prev[(1 + d + k) * fan_in * n + j];
                let abar_g = abar[(1 + k) * fan_in * n + j];
                let abar_h = abar[(1 + d + k) * fan_in * n + j];
                acc0 += abar_g * (-ts2 * g);
                acc0 += abar_h * (-ts2 * h - 2.0 * (s * s - 2.0 * t * t * s) * g * g);
                zbar_prev[(1 + k) * fan_in * n + j] = abar_g * s + abar_h * (-2.0 * ts2 * g);
                zbar_prev[(1 + d + k) * fan_in * n + j] = abar_h * s;
            }
            zbar_prev[j] = acc0;
        }
    }
}

/// Weighted squared-residual objective and its exact parameter gradient
/// over the whole batch.
///
/// Returns the per-group residual statistics together with the gradient of
/// `Σ_groups weight_g · Σ_{p ∈ g} r_p²`. Chunks are evaluated in parallel
/// and reduced in index order, so the result does not depend on the
/// number of worker threads.
pub fn loss_and_grad(
    spec: &NetworkSpec,
    params: &[f64],
    batch: &JetBatch,
) -> (LossStats, ParamGradient) {
    assert_eq!(params.len(), spec.param_count(), "parameter length");
    assert!(!batch.is_empty(), "empty batch");
    let d = batch.seeds.len();
    let planes = 1 + 2 * d;
    let n_total = batch.len();
    let last_layer = spec.n_layers() - 1;

    let chunk = chunk_len(n_total);
    let ranges: Vec<std::ops::Range<usize>> = (0..n_total)
        .step_by(chunk)
        .map(|start| start..(start + chunk).min(n_total))
        .collect();

    let partials: Vec<(LossStats, ParamGradient)> = ranges
        .into_par_iter()
        .map_init(
            || Workspace::new(spec, planes, chunk),
            |ws, range| {
                let n = range.len();
                forward_chunk(spec, params, &batch.inputs, &batch.seeds, range.clone(), ws);
                let mut stats = LossStats::default();
                head_chunk(batch, range, ws, last_layer, &mut stats);
                ws.grad.iter_mut().for_each(|v| *v = 0.0);
                backward_chunk(spec, params, d, n, ws);
                (stats, ws.grad.clone())
            },
        )
        .collect();

    let mut stats = LossStats::default();
    let mut grad = vec![0.0f64; spec.param_count()];
    for (s, g) in partials {
        for i in 0..2 {
            stats.sum_sq[i] += s.sum_sq[i];
            stats.count[i] += s.count[i];
        }
        for (dst, src) in grad.iter_mut().zip(&g) {
            *dst += src;
        }
    }
    (stats, grad)
}

/// Residual statistics without gradients. The per-group squared
/// residuals are sorted before the pairwise sum, so the result is
/// invariant under permutation of the batch points.
pub fn loss_only(spec: &NetworkSpec, params: &[f64], batch: &JetBatch) -> LossStats {
    assert!(!batch.is_empty(), "empty batch");
    let d = batch.seeds.len();
    let outs = forward_jets_batch(spec, params, &batch.inputs, &batch.seeds);
    let mut sq = [Vec::new(), Vec::new()];
    for p in 0..batch.len() {
        let mut r = batch.constant[p] + batch.coeff_value[p] * outs.value[p];
        for k in 0..d {
            r += batch.coeff_d1[p * d + k] * outs.d1[p * d + k];
            r += batch.coeff_d2[p * d + k] * outs.d2[p * d + k];
        }
        sq[batch.group[p] as usize].push(r * r);
    }
    let mut stats = LossStats::default();
    for g in 0..2 {
        sq[g].sort_by(f64::total_cmp);
        stats.sum_sq[g] = pairwise_sum(&sq[g]);
        stats.count[g] = sq[g].len();
    }
    stats
}

/// Output jets of the network over a batch of points: per-point value,
/// first and pure second derivatives with respect to the seeded
/// coordinates. Used for field export and residual diagnostics.
pub struct JetOutputs {
    pub value: Vec<f64>,
    /// `n × n_seeds`, point-major.
    pub d1: Vec<f64>,
    /// `n × n_seeds`, point-major.
    pub d2: Vec<f64>,
}

/// Batched jet-mode forward pass (no gradients). `inputs` is point-major
/// `n × input_dim`.
pub fn forward_jets_batch(
    spec: &NetworkSpec,
    params: &[f64],
    inputs: &[f64],
    seeds: &[usize],
) -> JetOutputs {
    let in_w = spec.input_dim();
    assert_eq!(inputs.len() % in_w, 0, "ragged input batch");
    let n_total = inputs.len() / in_w;
    let d = seeds.len();
    let planes = 1 + 2 * d;
    let last = spec.n_layers() - 1;

    let mut out = JetOutputs {
        value: Vec::with_capacity(n_total),
        d1: Vec::with_capacity(n_total * d),
        d2: Vec::with_capacity(n_total * d),
    };
    let mut ws = Workspace::new(spec, planes, CHUNK);
    for start in (0..n_total).step_by(CHUNK) {
        let range = start..(start + CHUNK).min(n_total);
        let n = range.len();
        forward_chunk(spec, params, inputs, seeds, range, &mut ws);
        let z = &ws.pre[last];
        out.value.extend_from_slice(&z[..n]);
        for q in 0..n {
            for k in 0..d {
                out.d1.push(z[(1 + k) * n + q]);
            }
            for k in 0..d {
                out.d2.push(z[(1 + d + k) * n + q]);
            }
        }
    }
    out
}

/// Plain batched forward pass: `inputs` is point-major `n × input_dim`,
/// the result is one value per point. Sequential; used by prediction and
/// quadrature.
pub fn forward_batch(spec: &NetworkSpec, params: &[f64], inputs: &[f64]) -> Vec<f64> {
    let in_w = spec.input_dim();
    assert_eq!(inputs.len() % in_w, 0, "ragged input batch");
    let n_total = inputs.len() / in_w;
    let widths = spec.widths();
    let mut out = Vec::with_capacity(n_total);

    let mut bufs: Vec<Vec<f64>> = widths.iter().map(|&w| vec![0.0; w * CHUNK]).collect();
    for start in (0..n_total).step_by(CHUNK) {
        let n = (n_total - start).min(CHUNK);
        for i in 0..in_w {
            for q in 0..n {
                bufs[0][i * n + q] = inputs[(start + q) * in_w + i];
            }
        }
        for layer in 0..spec.n_layers() {
            let (fan_in, fan_out) = (widths[layer], widths[layer + 1]);
            let (w_off, b_off) = spec.layer_offsets(layer);
            let weights = &params[w_off..w_off + fan_in * fan_out];
            let biases = &params[b_off..b_off + fan_out];
            let (head, tail) = bufs.split_at_mut(layer + 1);
            let a = &head[layer][..fan_in * n];
            let z = &mut tail[0][..fan_out * n];
            dgemm_rowmajor(
                fan_out,
                fan_in,
                n,
                1.0,
                weights,
                (fan_in as isize, 1),
                a,
                (n as isize, 1),
                0.0,
                z,
            );
            let activate = layer + 1 < spec.n_layers();
            for o in 0..fan_out {
                let bias = biases[o];
                for v in z[o * n..(o + 1) * n].iter_mut() {
                    *v += bias;
                    if activate {
                        *v = v.tanh();
                    }
                }
            }
        }
        out.extend_from_slice(&bufs[spec.n_layers()][..n]);
    }
    out
}
