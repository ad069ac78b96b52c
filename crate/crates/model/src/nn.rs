//! Elementary differentiable operations on `f64` matrices.
//!
//! Every forward function returns the output together with a cache holding
//! exactly what the matching backward function needs.  Backward functions
//! return input gradients and parameter gradients; accumulation into the
//! global gradient map happens in the caller.

use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Numerical floor added to the per-row variance inside layer norm.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Additive penalty used to disable masked attention scores before softmax.
const MASK_PENALTY: f64 = f64::NEG_INFINITY;

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

/// Cache for a `y = x W + b` application.
pub struct LinearCache {
    pub x: Array2<f64>,
}

/// Affine map `y = x W + b` with `x: (n, in)`, `w: (in, out)`, `b: (1, out)`.
pub fn linear_forward(x: &Array2<f64>, w: &Array2<f64>, b: &Array2<f64>) -> (Array2<f64>, LinearCache) {
    let y = x.dot(w) + b;
    (y, LinearCache { x: x.clone() })
}

/// Backward of [`linear_forward`]; returns `(dx, dw, db)`.
pub fn linear_backward(
    cache: &LinearCache,
    w: &Array2<f64>,
    dy: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let dx = dy.dot(&w.t());
    let dw = cache.x.t().dot(dy);
    let db = dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    (dx, dw, db)
}

// ---------------------------------------------------------------------------
// Layer norm
// ---------------------------------------------------------------------------

/// Cache for a row-wise layer normalisation.
pub struct LayerNormCache {
    pub xhat: Array2<f64>,
    pub inv_sigma: Array1<f64>,
}

/// Row-wise layer norm `y = g * (x - mean) / sigma + b` with learnable
/// `g, b: (1, d)`; the variance is the biased (population) estimate.
pub fn layer_norm_forward(
    x: &Array2<f64>,
    g: &Array2<f64>,
    b: &Array2<f64>,
) -> (Array2<f64>, LayerNormCache) {
    let d = x.ncols() as f64;
    let mean = x.mean_axis(Axis(1)).expect("non-empty rows");
    let mut xhat = x.clone();
    let mut inv_sigma = Array1::zeros(x.nrows());
    for (i, mut row) in xhat.outer_iter_mut().enumerate() {
        let mu = mean[i];
        row.mapv_inplace(|v| v - mu);
        let var = row.iter().map(|v| v * v).sum::<f64>() / d;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        row.mapv_inplace(|v| v * inv);
        inv_sigma[i] = inv;
    }
    let y = &xhat * g + b;
    (y, LayerNormCache { xhat, inv_sigma })
}

/// Backward of [`layer_norm_forward`]; returns `(dx, dg, db)`.
pub fn layer_norm_backward(
    cache: &LayerNormCache,
    g: &Array2<f64>,
    dy: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let d = dy.ncols() as f64;
    let dxhat = dy * g;
    let dg = (dy * &cache.xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
    let db = dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    let mut dx = Array2::zeros(dy.raw_dim());
    for i in 0..dy.nrows() {
        let dxhat_row = dxhat.row(i);
        let xhat_row = cache.xhat.row(i);
        let mean_dxhat = dxhat_row.sum() / d;
        let mean_dxhat_xhat = dxhat_row
            .iter()
            .zip(xhat_row.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / d;
        let inv = cache.inv_sigma[i];
        for j in 0..dy.ncols() {
            dx[[i, j]] = inv * (dxhat_row[j] - mean_dxhat - xhat_row[j] * mean_dxhat_xhat);
        }
    }
    (dx, dg, db)
}

// ---------------------------------------------------------------------------
// GELU
// ---------------------------------------------------------------------------

const GELU_SCALE: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_CUBIC: f64 = 0.044_715;

/// Cache for the GELU activation.
pub struct GeluCache {
    pub x: Array2<f64>,
}

fn gelu_scalar(x: f64) -> f64 {
    let inner = GELU_SCALE * (x + GELU_CUBIC * x * x * x);
    0.5 * x * (1.0 + inner.tanh())
}

fn gelu_grad_scalar(x: f64) -> f64 {
    let u = GELU_SCALE * (x + GELU_CUBIC * x * x * x);
    let t = u.tanh();
    let du = GELU_SCALE * (1.0 + 3.0 * GELU_CUBIC * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}

/// Smooth (tanh-form) GELU activation applied element-wise.
pub fn gelu_forward(x: &Array2<f64>) -> (Array2<f64>, GeluCache) {
    let y = x.mapv(gelu_scalar);
    (y, GeluCache { x: x.clone() })
}

/// Backward of [`gelu_forward`].
pub fn gelu_backward(cache: &GeluCache, dy: &Array2<f64>) -> Array2<f64> {
    let mut dx = cache.x.mapv(gelu_grad_scalar);
    dx *= dy;
    dx
}

// ---------------------------------------------------------------------------
// Masked softmax
// ---------------------------------------------------------------------------

/// Row-wise softmax over the entries where `mask` is true.
///
/// Masked-out entries receive probability exactly zero.  Rows with no
/// permitted entry are explicitly zeroed rather than falling back to a
/// uniform distribution.
pub fn masked_softmax(scores: &Array2<f64>, mask: ArrayView2<bool>) -> Array2<f64> {
    assert_eq!(scores.dim(), mask.dim(), "mask shape must match scores");
    let mut out = Array2::zeros(scores.raw_dim());
    for i in 0..scores.nrows() {
        let mut max = MASK_PENALTY;
        for j in 0..scores.ncols() {
            if mask[[i, j]] && scores[[i, j]] > max {
                max = scores[[i, j]];
            }
        }
        if !max.is_finite() {
            continue; // fully masked row stays zero
        }
        let mut sum = 0.0;
        for j in 0..scores.ncols() {
            if mask[[i, j]] {
                let e = (scores[[i, j]] - max).exp();
                out[[i, j]] = e;
                sum += e;
            }
        }
        for j in 0..scores.ncols() {
            if mask[[i, j]] {
                out[[i, j]] /= sum;
            }
        }
    }
    out
}

/// Backward of [`masked_softmax`] given the forward output `probs`.
///
/// `ds_ij = p_ij * (dp_ij - sum_k dp_ik p_ik)`; masked entries and fully
/// masked rows have `p = 0` and therefore receive zero gradient.
pub fn masked_softmax_backward(probs: &Array2<f64>, dprobs: &Array2<f64>) -> Array2<f64> {
    let mut ds = Array2::zeros(probs.raw_dim());
    for i in 0..probs.nrows() {
        let dot = probs
            .row(i)
            .iter()
            .zip(dprobs.row(i).iter())
            .map(|(p, dp)| p * dp)
            .sum::<f64>();
        for j in 0..probs.ncols() {
            ds[[i, j]] = probs[[i, j]] * (dprobs[[i, j]] - dot);
        }
    }
    ds
}
