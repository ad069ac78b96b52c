//! Multi-head scaled dot-product attention with a boolean mask.
//!
//! The same routine serves self-attention (queries and keys from one stream)
//! and cross-attention (queries from the noisy stream, keys/values from the
//! condition stream); the caller decides which inputs to pass.

use crate::nn::{masked_softmax, masked_softmax_backward};
use ndarray::{s, Array2, ArrayView2};

/// Projection weights of one attention operator.
pub struct AttentionParams<'a> {
    pub wq: &'a Array2<f64>,
    pub wk: &'a Array2<f64>,
    pub wv: &'a Array2<f64>,
    pub wo: &'a Array2<f64>,
    pub bq: &'a Array2<f64>,
    pub bk: &'a Array2<f64>,
    pub bv: &'a Array2<f64>,
    pub bo: &'a Array2<f64>,
}

/// Gradients of [`AttentionParams`] in the same order.
pub struct AttentionGrads {
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
    pub bq: Array2<f64>,
    pub bk: Array2<f64>,
    pub bv: Array2<f64>,
    pub bo: Array2<f64>,
}

/// Forward cache of one attention application.
pub struct AttentionCache {
    xq: Array2<f64>,
    xk: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Per-head post-softmax attention probabilities.
    probs: Vec<Array2<f64>>,
    concat: Array2<f64>,
    heads: usize,
}

/// Multi-head attention: `y = concat_h(softmax_mask(Q_h K_h^T / sqrt(d_h)) V_h) Wo + bo`.
///
/// `mask[i][j]` grants query row `i` access to key row `j`.  Rows without a
/// single permitted key produce an exactly-zero attention output (the
/// residual connection around the operator keeps such tokens alive).
pub fn attention_forward(
    xq: &Array2<f64>,
    xk: &Array2<f64>,
    mask: ArrayView2<bool>,
    params: &AttentionParams<'_>,
    heads: usize,
) -> (Array2<f64>, AttentionCache) {
    let d = params.wq.ncols();
    debug_assert_eq!(d % heads, 0);
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();

    let q = xq.dot(params.wq) + params.bq;
    let k = xk.dot(params.wk) + params.bk;
    let v = xk.dot(params.wv) + params.bv;

    let n = xq.nrows();
    let mut concat = Array2::zeros((n, d));
    let mut probs = Vec::with_capacity(heads);
    for h in 0..heads {
        let cols = h * dh..(h + 1) * dh;
        let qh = q.slice(s![.., cols.clone()]);
        let kh = k.slice(s![.., cols.clone()]);
        let vh = v.slice(s![.., cols.clone()]);
        let scores = qh.dot(&kh.t()) * scale;
        let p = masked_softmax(&scores, mask);
        let out = p.dot(&vh);
        concat.slice_mut(s![.., cols]).assign(&out);
        probs.push(p);
    }
    let y = concat.dot(params.wo) + params.bo;
    let cache = AttentionCache {
        xq: xq.clone(),
        xk: xk.clone(),
        q,
        k,
        v,
        probs,
        concat,
        heads,
    };
    (y, cache)
}

/// Backward of [`attention_forward`]; returns `(dxq, dxk, grads)`.
///
/// For self-attention the caller adds `dxq + dxk` into the input gradient.
pub fn attention_backward(
    cache: &AttentionCache,
    params: &AttentionParams<'_>,
    dy: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, AttentionGrads) {
    let d = params.wq.ncols();
    let heads = cache.heads;
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();

    // Output projection.
    let dconcat = dy.dot(&params.wo.t());
    let dwo = cache.concat.t().dot(dy);
    let dbo = dy.sum_axis(ndarray::Axis(0)).insert_axis(ndarray::Axis(0));

    let mut dq = Array2::zeros(cache.q.raw_dim());
    let mut dk = Array2::zeros(cache.k.raw_dim());
    let mut dv = Array2::zeros(cache.v.raw_dim());

    for h in 0..heads {
        let cols = h * dh..(h + 1) * dh;
        let p = &cache.probs[h];
        let qh = cache.q.slice(s![.., cols.clone()]);
        let kh = cache.k.slice(s![.., cols.clone()]);
        let vh = cache.v.slice(s![.., cols.clone()]);
        let dout = dconcat.slice(s![.., cols.clone()]);

        let dp = dout.dot(&vh.t());
        let dvh = p.t().dot(&dout);
        let mut dscores = masked_softmax_backward(p, &dp);
        dscores *= scale;
        let dqh = dscores.dot(&kh);
        let dkh = dscores.t().dot(&qh);

        dq.slice_mut(s![.., cols.clone()]).assign(&dqh);
        dk.slice_mut(s![.., cols.clone()]).assign(&dkh);
        dv.slice_mut(s![.., cols]).assign(&dvh);
    }

    let dxq = dq.dot(&params.wq.t());
    let dxk = dk.dot(&params.wk.t()) + dv.dot(&params.wv.t());
    let grads = AttentionGrads {
        wq: cache.xq.t().dot(&dq),
        wk: cache.xk.t().dot(&dk),
        wv: cache.xk.t().dot(&dv),
        wo: dwo,
        bq: dq.sum_axis(ndarray::Axis(0)).insert_axis(ndarray::Axis(0)),
        bk: dk.sum_axis(ndarray::Axis(0)).insert_axis(ndarray::Axis(0)),
        bv: dv.sum_axis(ndarray::Axis(0)).insert_axis(ndarray::Axis(0)),
        bo: dbo,
    };
    (dxq, dxk, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Owned {
        wq: Array2<f64>,
        wk: Array2<f64>,
        wv: Array2<f64>,
        wo: Array2<f64>,
        bq: Array2<f64>,
        bk: Array2<f64>,
        bv: Array2<f64>,
        bo: Array2<f64>,
    }

    impl Owned {
        fn new(rng: &mut ChaCha8Rng, d: usize) -> Self {
            let mut m = |r, c| Array2::from_shape_fn((r, c), |_| rng.gen_range(-0.5..0.5));
            Owned {
                wq: m(d, d),
                wk: m(d, d),
                wv: m(d, d),
                wo: m(d, d),
                bq: m(1, d),
                bk: m(1, d),
                bv: m(1, d),
                bo: m(1, d),
            }
        }

        fn params(&self) -> AttentionParams<'_> {
            AttentionParams {
                wq: &self.wq,
                wk: &self.wk,
                wv: &self.wv,
                wo: &self.wo,
                bq: &self.bq,
                bk: &self.bk,
                bv: &self.bv,
                bo: &self.bo,
            }
        }
    }

    fn full_mask(n: usize, m: usize) -> Array2<bool> {
        Array2::from_elem((n, m), true)
    }

    #[test]
    fn masked_key_never_influences_permitted_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d = 8;
        let owned = Owned::new(&mut rng, d);
        let mut mask = full_mask(4, 4);
        // Hide token 3 from tokens 0 and 1; token 2 may still see it.
        mask[[0, 3]] = false;
        mask[[1, 3]] = false;

        let x = Array2::from_shape_fn((4, d), |_| rng.gen_range(-1.0..1.0));
        let (y1, _) = attention_forward(&x, &x, mask.view(), &owned.params(), 2);

        let mut x2 = x.clone();
        for j in 0..d {
            x2[[3, j]] = rng.gen_range(-10.0..10.0);
        }
        let (y2, _) = attention_forward(&x2, &x2, mask.view(), &owned.params(), 2);

        // Rows 0 and 1 cannot see token 3 as a key; because row 3 is still a
        // query its own output changes, but rows 0 and 1 must be bit-identical.
        for i in [0usize, 1] {
            for j in 0..d {
                assert_eq!(y1[[i, j]], y2[[i, j]], "row {i} col {j} leaked");
            }
        }
        // Row 2 is allowed to see token 3, so it must change.
        let row2_changed = (0..d).any(|j| y1[[2, j]] != y2[[2, j]]);
        assert!(row2_changed);
    }

    #[test]
    fn fully_masked_query_rows_output_only_the_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let d = 6;
        let owned = Owned::new(&mut rng, d);
        let mut mask = full_mask(3, 3);
        for j in 0..3 {
            mask[[1, j]] = false;
        }
        let x = Array2::from_shape_fn((3, d), |_| rng.gen_range(-1.0..1.0));
        let (y, _) = attention_forward(&x, &x, mask.view(), &owned.params(), 3);
        // Row 1 attends to nothing: concat is zero, so y = bo.
        for j in 0..d {
            assert!((y[[1, j]] - owned.bo[[0, j]]).abs() < 1e-15);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let d = 4;
        let owned = Owned::new(&mut rng, d);
        let mut mask = full_mask(3, 3);
        mask[[0, 2]] = false;
        let xq = Array2::from_shape_fn((3, d), |_| rng.gen_range(-1.0..1.0));
        let xk = Array2::from_shape_fn((3, d), |_| rng.gen_range(-1.0..1.0));

        let loss = |xq: &Array2<f64>, xk: &Array2<f64>, owned: &Owned| {
            let (y, _) = attention_forward(xq, xk, mask.view(), &owned.params(), 2);
            0.5 * y.iter().map(|v| v * v).sum::<f64>()
        };

        let (y, cache) = attention_forward(&xq, &xk, mask.view(), &owned.params(), 2);
        let (dxq, dxk, grads) = attention_backward(&cache, &owned.params(), &y);

        let h = 1e-6;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-8);

        for (i, j) in [(0, 0), (1, 3), (2, 2)] {
            let mut plus = xq.clone();
            plus[[i, j]] += h;
            let mut minus = xq.clone();
            minus[[i, j]] -= h;
            let fd = (loss(&plus, &xk, &owned) - loss(&minus, &xk, &owned)) / (2.0 * h);
            assert!(rel(fd, dxq[[i, j]]) < 1e-5, "dxq at ({i},{j})");

            let mut plus = xk.clone();
            plus[[i, j]] += h;
            let mut minus = xk.clone();
            minus[[i, j]] -= h;
            let fd = (loss(&xq, &plus, &owned) - loss(&xq, &minus, &owned)) / (2.0 * h);
            assert!(rel(fd, dxk[[i, j]]) < 1e-5, "dxk at ({i},{j})");
        }

        for (i, j) in [(0, 0), (2, 1), (3, 3)] {
            let mut tweaked = Owned {
                wq: owned.wq.clone(),
                wk: owned.wk.clone(),
                wv: owned.wv.clone(),
                wo: owned.wo.clone(),
                bq: owned.bq.clone(),
                bk: owned.bk.clone(),
                bv: owned.bv.clone(),
                bo: owned.bo.clone(),
            };
            tweaked.wv[[i, j]] += h;
            let plus = loss(&xq, &xk, &tweaked);
            tweaked.wv[[i, j]] -= 2.0 * h;
            let minus = loss(&xq, &xk, &tweaked);
            let fd = (plus - minus) / (2.0 * h);
            assert!(rel(fd, grads.wv[[i, j]]) < 1e-5, "dwv at ({i},{j})");
        }
    }
}
