//! The denoising network.
//!
//! Two branches share one architecture: an affine token embedder, `blocks`
//! rounds of `CSA → GSA → RCA` attention (each operator followed by its own
//! feed-forward sublayer, with residual connections and post-normalisation
//! throughout), and an affine decoding head.
//!
//! * the continuous branch embeds 98-wide rows and decodes two noise values
//!   per token;
//! * the discrete branch embeds 114-wide rows (adding the rounded coordinate
//!   bits) and decodes sixteen bit logits per token.
//!
//! Reverse cross attention (RCA) draws keys and values from a condition
//! stream: the same embedder applied to feature rows whose generated-sample
//! slots are zeroed and whose condition slots carry the aligned condition.
//!
//! All parameters live in a name-keyed map of `f64` matrices; backward passes
//! accumulate gradients into an equally keyed map, which keeps optimisers,
//! checkpoints and finite-difference verification trivial.

use crate::attention::{attention_backward, attention_forward, AttentionCache, AttentionParams};
use crate::features::{
    cond_bit_features, cond_noise_features, discrete_features, noise_features, MaskSet,
    BIT_FEATURE_WIDTH, NOISE_FEATURE_WIDTH,
};
use crate::nn::{
    gelu_backward, gelu_forward, layer_norm_backward, layer_norm_forward, linear_backward,
    linear_forward, GeluCache, LayerNormCache, LinearCache,
};
use crate::{DenoiserConfig, ModelError, Result, TimestepEncoding};
use floorgen_core::token::TokenSequence;
use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::BTreeMap;

/// Name-keyed gradient accumulator matching [`Denoiser::params`].
pub type Grads = BTreeMap<String, Array2<f64>>;

/// Standard deviation of the weight initialisation.
const INIT_STD: f64 = 0.02;

/// Width of the optional sinusoidal timestep encoding (8 frequencies).
const SINE_DIM: usize = 16;

/// Continuous noise estimate per token: (x, y).
pub const NOISE_OUT_WIDTH: usize = 2;

/// Discrete bit logits per token: 8 bits for each coordinate.
pub const BITS_OUT_WIDTH: usize = 16;

/// Adds `value` into `grads[name]`, creating the slot on first use.
pub fn accumulate(grads: &mut Grads, name: &str, value: Array2<f64>) {
    grads
        .entry(name.to_string())
        .and_modify(|g| *g += &value)
        .or_insert(value);
}

/// Static description of one branch of the network.
struct PathSpec {
    prefix: &'static str,
    embed: &'static str,
    head: &'static str,
    time: &'static str,
    blocks: usize,
    in_width: usize,
    out_width: usize,
}

impl PathSpec {
    fn continuous(config: &DenoiserConfig) -> PathSpec {
        PathSpec {
            prefix: "cont",
            embed: "embed",
            head: "noise_head",
            time: "time",
            blocks: config.blocks,
            in_width: NOISE_FEATURE_WIDTH,
            out_width: NOISE_OUT_WIDTH,
        }
    }

    fn discrete(config: &DenoiserConfig) -> PathSpec {
        PathSpec {
            prefix: "disc",
            embed: "bit_embed",
            head: "bit_head",
            time: "disc_time",
            blocks: config.discrete_blocks,
            in_width: BIT_FEATURE_WIDTH,
            out_width: BITS_OUT_WIDTH,
        }
    }
}

// ---------------------------------------------------------------------------
// Forward caches
// ---------------------------------------------------------------------------

struct AttnSublayerCache {
    attn: AttentionCache,
    ln: LayerNormCache,
}

struct FfSublayerCache {
    l1: LinearCache,
    gelu: GeluCache,
    l2: LinearCache,
    ln: LayerNormCache,
}

struct BlockCache {
    csa: AttnSublayerCache,
    csa_ff: FfSublayerCache,
    gsa: AttnSublayerCache,
    gsa_ff: FfSublayerCache,
    rca: AttnSublayerCache,
    rca_ff: FfSublayerCache,
}

struct PathCache {
    embed: LinearCache,
    cond_embed: LinearCache,
    /// Sinusoidal timestep row, present only in sinusoidal mode.
    time_row: Option<Array2<f64>>,
    blocks: Vec<BlockCache>,
    head: LinearCache,
    pad: Vec<bool>,
}

/// Forward pass of the continuous branch with everything needed for backward.
pub struct NoiseForward {
    /// Per-token noise estimate, `(token_count, 2)`; padding rows are zero.
    pub eps_hat: Array2<f64>,
    cache: PathCache,
}

/// Forward pass of the discrete branch with everything needed for backward.
pub struct BitsForward {
    /// Per-token bit logits, `(token_count, 16)`; padding rows are zero.
    pub logits: Array2<f64>,
    cache: PathCache,
}

// ---------------------------------------------------------------------------
// Denoiser
// ---------------------------------------------------------------------------

/// The denoising network: hyper-parameters plus a name-keyed parameter map.
///
/// The map's sorted iteration order is the canonical parameter order used by
/// optimisers and checkpoints.
#[derive(Debug, Clone)]
pub struct Denoiser {
    pub config: DenoiserConfig,
    pub params: BTreeMap<String, Array2<f64>>,
}

fn attn_param_specs(out: &mut Vec<(String, [usize; 2])>, prefix: &str, d: usize) {
    for w in ["wq", "wk", "wv", "wo"] {
        out.push((format!("{prefix}.{w}"), [d, d]));
    }
    for b in ["bq", "bk", "bv", "bo"] {
        out.push((format!("{prefix}.{b}"), [1, d]));
    }
}

fn ff_param_specs(out: &mut Vec<(String, [usize; 2])>, prefix: &str, d: usize, f: usize) {
    out.push((format!("{prefix}.w1"), [d, f]));
    out.push((format!("{prefix}.b1"), [1, f]));
    out.push((format!("{prefix}.w2"), [f, d]));
    out.push((format!("{prefix}.b2"), [1, d]));
}

fn ln_param_specs(out: &mut Vec<(String, [usize; 2])>, prefix: &str, d: usize) {
    out.push((format!("{prefix}.g"), [1, d]));
    out.push((format!("{prefix}.b"), [1, d]));
}

impl Denoiser {
    /// Full list of `(name, shape)` pairs for `config`, in construction order.
    pub fn param_specs(config: &DenoiserConfig) -> Result<Vec<(String, [usize; 2])>> {
        config.validate()?;
        let d = config.d_model;
        let f = config.ff_mult * d;
        let mut specs = Vec::new();
        for spec in [PathSpec::continuous(config), PathSpec::discrete(config)] {
            specs.push((format!("{}.w", spec.embed), [spec.in_width, d]));
            specs.push((format!("{}.b", spec.embed), [1, d]));
            if config.timestep_encoding == TimestepEncoding::Sinusoidal {
                specs.push((format!("{}.w", spec.time), [SINE_DIM, d]));
            }
            for b in 0..spec.blocks {
                for kind in ["csa", "gsa", "rca"] {
                    let base = format!("{}.b{}.{}", spec.prefix, b, kind);
                    attn_param_specs(&mut specs, &base, d);
                    ln_param_specs(&mut specs, &format!("{base}_ln"), d);
                    ff_param_specs(&mut specs, &format!("{base}_ff"), d, f);
                    ln_param_specs(&mut specs, &format!("{base}_ff_ln"), d);
                }
            }
            specs.push((format!("{}.w", spec.head), [d, spec.out_width]));
            specs.push((format!("{}.b", spec.head), [1, spec.out_width]));
        }
        Ok(specs)
    }

    /// Initialises a fresh network: weights `N(0, 0.02)`, biases zero, layer
    /// norm gains one, and both decoding heads exactly zero (so an untrained
    /// network predicts zero noise and zero logits).
    pub fn init(config: DenoiserConfig, seed: u64) -> Result<Denoiser> {
        let specs = Denoiser::param_specs(&config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_STD).expect("valid std");
        let mut params = BTreeMap::new();
        for (name, [rows, cols]) in specs {
            let is_head = name.starts_with("noise_head") || name.starts_with("bit_head");
            let value = if rows == 1 {
                if name.ends_with(".g") {
                    Array2::ones((rows, cols))
                } else {
                    Array2::zeros((rows, cols))
                }
            } else if is_head {
                Array2::zeros((rows, cols))
            } else {
                Array2::from_shape_fn((rows, cols), |_| normal.sample(&mut rng))
            };
            params.insert(name, value);
        }
        Ok(Denoiser { config, params })
    }

    /// Replaces the two zero-initialised decoding heads with small random
    /// values.  Finite-difference gradient verification needs this: with zero
    /// heads every output — and therefore every gradient — is exactly zero.
    pub fn randomize_heads(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.1).expect("valid std");
        for head in ["noise_head.w", "noise_head.b", "bit_head.w", "bit_head.b"] {
            let value = self.params.get_mut(head).expect("head exists");
            value.mapv_inplace(|_| normal.sample(&mut rng));
        }
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.params.values().map(|p| p.len()).sum()
    }

    fn p(&self, name: &str) -> &Array2<f64> {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("missing parameter {name}"))
    }

    fn attention_params(&self, prefix: &str) -> AttentionParams<'_> {
        AttentionParams {
            wq: self.p(&format!("{prefix}.wq")),
            wk: self.p(&format!("{prefix}.wk")),
            wv: self.p(&format!("{prefix}.wv")),
            wo: self.p(&format!("{prefix}.wo")),
            bq: self.p(&format!("{prefix}.bq")),
            bk: self.p(&format!("{prefix}.bk")),
            bv: self.p(&format!("{prefix}.bv")),
            bo: self.p(&format!("{prefix}.bo")),
        }
    }

    // -- forward ------------------------------------------------------------

    fn attn_sublayer(
        &self,
        x: &Array2<f64>,
        kv: &Array2<f64>,
        mask: ArrayView2<bool>,
        base: &str,
    ) -> (Array2<f64>, AttnSublayerCache) {
        let params = self.attention_params(base);
        let (a, attn) = attention_forward(x, kv, mask, &params, self.config.heads);
        let u = x + &a;
        let (y, ln) = layer_norm_forward(
            &u,
            self.p(&format!("{base}_ln.g")),
            self.p(&format!("{base}_ln.b")),
        );
        (y, AttnSublayerCache { attn, ln })
    }

    fn ff_sublayer(&self, x: &Array2<f64>, base: &str) -> (Array2<f64>, FfSublayerCache) {
        let (a, l1) = linear_forward(
            x,
            self.p(&format!("{base}_ff.w1")),
            self.p(&format!("{base}_ff.b1")),
        );
        let (g, gelu) = gelu_forward(&a);
        let (f, l2) = linear_forward(
            &g,
            self.p(&format!("{base}_ff.w2")),
            self.p(&format!("{base}_ff.b2")),
        );
        let u = x + &f;
        let (y, ln) = layer_norm_forward(
            &u,
            self.p(&format!("{base}_ff_ln.g")),
            self.p(&format!("{base}_ff_ln.b")),
        );
        (y, FfSublayerCache { l1, gelu, l2, ln })
    }

    fn sine_row(t_frac: f64) -> Array2<f64> {
        let mut s = Array2::zeros((1, SINE_DIM));
        for k in 0..SINE_DIM / 2 {
            let angle = std::f64::consts::PI * t_frac * f64::exp2(k as f64);
            s[[0, 2 * k]] = angle.sin();
            s[[0, 2 * k + 1]] = angle.cos();
        }
        s
    }

    fn run_path(
        &self,
        spec: &PathSpec,
        feats: &Array2<f64>,
        cond_feats: &Array2<f64>,
        masks: &MaskSet,
        pad: &[bool],
        t_frac: f64,
    ) -> Result<(Array2<f64>, PathCache)> {
        let n = feats.nrows();
        if masks.csa.dim() != (n, n) || masks.gsa.dim() != (n, n) || masks.rca.dim() != (n, n) {
            return Err(ModelError::Config(format!(
                "mask shape does not match token count {n}"
            )));
        }
        let embed_w = self.p(&format!("{}.w", spec.embed));
        let embed_b = self.p(&format!("{}.b", spec.embed));
        let (mut h, embed) = linear_forward(feats, embed_w, embed_b);
        let (mut c, cond_embed) = linear_forward(cond_feats, embed_w, embed_b);

        let time_row = if self.config.timestep_encoding == TimestepEncoding::Sinusoidal {
            let s = Denoiser::sine_row(t_frac);
            let contrib = s.dot(self.p(&format!("{}.w", spec.time)));
            h += &contrib;
            c += &contrib;
            Some(s)
        } else {
            None
        };

        let mut blocks = Vec::with_capacity(spec.blocks);
        for b in 0..spec.blocks {
            let base = |kind: &str| format!("{}.b{}.{}", spec.prefix, b, kind);
            let (h1, csa) = self.attn_sublayer(&h, &h, masks.csa.view(), &base("csa"));
            let (h2, csa_ff) = self.ff_sublayer(&h1, &base("csa"));
            let (h3, gsa) = self.attn_sublayer(&h2, &h2, masks.gsa.view(), &base("gsa"));
            let (h4, gsa_ff) = self.ff_sublayer(&h3, &base("gsa"));
            let (h5, rca) = self.attn_sublayer(&h4, &c, masks.rca.view(), &base("rca"));
            let (h6, rca_ff) = self.ff_sublayer(&h5, &base("rca"));
            h = h6;
            blocks.push(BlockCache {
                csa,
                csa_ff,
                gsa,
                gsa_ff,
                rca,
                rca_ff,
            });
        }

        let (mut out, head) = linear_forward(
            &h,
            self.p(&format!("{}.w", spec.head)),
            self.p(&format!("{}.b", spec.head)),
        );
        for (i, is_pad) in pad.iter().enumerate() {
            if *is_pad {
                out.row_mut(i).fill(0.0);
            }
        }
        if !out.iter().all(|v| v.is_finite()) {
            return Err(ModelError::Numeric(format!(
                "{} branch produced a non-finite output",
                spec.prefix
            )));
        }
        let cache = PathCache {
            embed,
            cond_embed,
            time_row,
            blocks,
            head,
            pad: pad.to_vec(),
        };
        Ok((out, cache))
    }

    /// Continuous branch forward pass, keeping the cache for backward.
    pub fn forward_noise(
        &self,
        seq: &TokenSequence,
        t_frac: f64,
        masks: &MaskSet,
        cond_enabled: bool,
    ) -> Result<NoiseForward> {
        let feats = noise_features(seq, t_frac, cond_enabled)?;
        let cond_feats = cond_noise_features(seq, t_frac, cond_enabled)?;
        let spec = PathSpec::continuous(&self.config);
        let (eps_hat, cache) = self.run_path(&spec, &feats, &cond_feats, masks, &seq.pad, t_frac)?;
        Ok(NoiseForward { eps_hat, cache })
    }

    /// Per-token noise estimate, `(token_count, 2)`; padding rows are zero.
    pub fn predict_noise(
        &self,
        seq: &TokenSequence,
        t_frac: f64,
        masks: &MaskSet,
        cond_enabled: bool,
    ) -> Result<Array2<f64>> {
        Ok(self.forward_noise(seq, t_frac, masks, cond_enabled)?.eps_hat)
    }

    /// Discrete branch forward pass, keeping the cache for backward.
    ///
    /// `x0_est` is the continuous coordinate estimate; it is treated as a
    /// constant input (no gradient flows back into the continuous branch).
    pub fn forward_bits(
        &self,
        seq: &TokenSequence,
        x0_est: &Array2<f64>,
        t_frac: f64,
        masks: &MaskSet,
        cond_enabled: bool,
    ) -> Result<BitsForward> {
        let feats = discrete_features(seq, x0_est, t_frac, cond_enabled)?;
        let cond_feats = cond_bit_features(seq, t_frac, cond_enabled)?;
        let spec = PathSpec::discrete(&self.config);
        let (logits, cache) = self.run_path(&spec, &feats, &cond_feats, masks, &seq.pad, t_frac)?;
        Ok(BitsForward { logits, cache })
    }

    /// Per-token coordinate-bit logits, `(token_count, 16)`; padding rows are
    /// zero.
    pub fn predict_bits(
        &self,
        seq: &TokenSequence,
        x0_est: &Array2<f64>,
        t_frac: f64,
        masks: &MaskSet,
        cond_enabled: bool,
    ) -> Result<Array2<f64>> {
        Ok(self
            .forward_bits(seq, x0_est, t_frac, masks, cond_enabled)?
            .logits)
    }

    // -- backward -----------------------------------------------------------

    /// Backward through one attention sublayer.  Returns the gradient flowing
    /// into the query stream (including the residual path) and the gradient
    /// flowing into the key/value stream.
    fn attn_sublayer_backward(
        &self,
        cache: &AttnSublayerCache,
        base: &str,
        dy: &Array2<f64>,
        grads: &mut Grads,
    ) -> (Array2<f64>, Array2<f64>) {
        let g = self.p(&format!("{base}_ln.g"));
        let (du, dg, db) = layer_norm_backward(&cache.ln, g, dy);
        accumulate(grads, &format!("{base}_ln.g"), dg);
        accumulate(grads, &format!("{base}_ln.b"), db);

        let params = self.attention_params(base);
        let (dxq, dxk, agrads) = attention_backward(&cache.attn, &params, &du);
        accumulate(grads, &format!("{base}.wq"), agrads.wq);
        accumulate(grads, &format!("{base}.wk"), agrads.wk);
        accumulate(grads, &format!("{base}.wv"), agrads.wv);
        accumulate(grads, &format!("{base}.wo"), agrads.wo);
        accumulate(grads, &format!("{base}.bq"), agrads.bq);
        accumulate(grads, &format!("{base}.bk"), agrads.bk);
        accumulate(grads, &format!("{base}.bv"), agrads.bv);
        accumulate(grads, &format!("{base}.bo"), agrads.bo);

        ((&du + &dxq), dxk)
    }

    fn ff_sublayer_backward(
        &self,
        cache: &FfSublayerCache,
        base: &str,
        dy: &Array2<f64>,
        grads: &mut Grads,
    ) -> Array2<f64> {
        let g = self.p(&format!("{base}_ff_ln.g"));
        let (du, dg, db) = layer_norm_backward(&cache.ln, g, dy);
        accumulate(grads, &format!("{base}_ff_ln.g"), dg);
        accumulate(grads, &format!("{base}_ff_ln.b"), db);

        let (dgelu_out, dw2, db2) =
            linear_backward(&cache.l2, self.p(&format!("{base}_ff.w2")), &du);
        accumulate(grads, &format!("{base}_ff.w2"), dw2);
        accumulate(grads, &format!("{base}_ff.b2"), db2);
        let da = gelu_backward(&cache.gelu, &dgelu_out);
        let (dx_ff, dw1, db1) = linear_backward(&cache.l1, self.p(&format!("{base}_ff.w1")), &da);
        accumulate(grads, &format!("{base}_ff.w1"), dw1);
        accumulate(grads, &format!("{base}_ff.b1"), db1);

        &du + &dx_ff
    }

    fn backward_path(
        &self,
        spec: &PathSpec,
        cache: &PathCache,
        d_out: &Array2<f64>,
        grads: &mut Grads,
    ) {
        // The forward pass zeroes padding rows of the output, so the chain
        // rule zeroes their incoming gradient.
        let mut d_out = d_out.clone();
        for (i, is_pad) in cache.pad.iter().enumerate() {
            if *is_pad {
                d_out.row_mut(i).fill(0.0);
            }
        }

        let head_w = format!("{}.w", spec.head);
        let (mut dh, dw, db) = linear_backward(&cache.head, self.p(&head_w), &d_out);
        accumulate(grads, &head_w, dw);
        accumulate(grads, &format!("{}.b", spec.head), db);

        let mut dc = Array2::zeros((cache.cond_embed.x.nrows(), self.config.d_model));
        for (b, bc) in cache.blocks.iter().enumerate().rev() {
            let base = |kind: &str| format!("{}.b{}.{}", spec.prefix, b, kind);
            dh = self.ff_sublayer_backward(&bc.rca_ff, &base("rca"), &dh, grads);
            let (dq, dkv) = self.attn_sublayer_backward(&bc.rca, &base("rca"), &dh, grads);
            dh = dq;
            dc += &dkv;
            dh = self.ff_sublayer_backward(&bc.gsa_ff, &base("gsa"), &dh, grads);
            let (dq, dkv) = self.attn_sublayer_backward(&bc.gsa, &base("gsa"), &dh, grads);
            dh = &dq + &dkv;
            dh = self.ff_sublayer_backward(&bc.csa_ff, &base("csa"), &dh, grads);
            let (dq, dkv) = self.attn_sublayer_backward(&bc.csa, &base("csa"), &dh, grads);
            dh = &dq + &dkv;
        }

        if let Some(s) = &cache.time_row {
            let col_h = dh.sum_axis(Axis(0)).insert_axis(Axis(0));
            let col_c = dc.sum_axis(Axis(0)).insert_axis(Axis(0));
            let dt = s.t().dot(&(&col_h + &col_c));
            accumulate(grads, &format!("{}.w", spec.time), dt);
        }

        let embed_w = format!("{}.w", spec.embed);
        let embed_b = format!("{}.b", spec.embed);
        let (_, dw, db) = linear_backward(&cache.embed, self.p(&embed_w), &dh);
        accumulate(grads, &embed_w, dw);
        accumulate(grads, &embed_b, db);
        let (_, dw, db) = linear_backward(&cache.cond_embed, self.p(&embed_w), &dc);
        accumulate(grads, &embed_w, dw);
        accumulate(grads, &embed_b, db);
    }

    /// Accumulates parameter gradients of the continuous branch given
    /// `d_eps = dLoss/d eps_hat`.
    pub fn backward_noise(&self, fwd: &NoiseForward, d_eps: &Array2<f64>, grads: &mut Grads) {
        let spec = PathSpec::continuous(&self.config);
        self.backward_path(&spec, &fwd.cache, d_eps, grads);
    }

    /// Accumulates parameter gradients of the discrete branch given
    /// `d_logits = dLoss/d logits`.
    pub fn backward_bits(&self, fwd: &BitsForward, d_logits: &Array2<f64>, grads: &mut Grads) {
        let spec = PathSpec::discrete(&self.config);
        self.backward_path(&spec, &fwd.cache, d_logits, grads);
    }
}
