//! Loss computation and the deterministic training loop.
//!
//! ## Determinism contract
//!
//! Every random draw in training comes from a ChaCha stream keyed by
//! `(seed, dataset position)`, where the position is where the step's batch
//! starts in the (cyclically read) dataset. Two consequences:
//!
//! * a fixed seed reproduces the run bit-for-bit, including across a
//!   checkpoint/resume boundary, because no RNG state needs carrying over;
//! * revisiting the same batch draws the same timesteps and noise, so with a
//!   null optimizer (lr = 0) the loss curve is exactly constant — the knob
//!   that isolates optimizer effects from sampling effects.
//!
//! The trade-off is fewer distinct noise draws per example on tiny datasets;
//! at desk scale the (example, timestep) coverage is still dense because
//! batch boundaries rotate through the data.
//!
//! ## Losses
//!
//! Per step, each batch item draws one timestep uniformly from [1, T] and
//! per-token Gaussian noise. The noise loss is the mean squared error
//! between predicted and true noise over non-padded token coordinates,
//! pooled over the batch (equivalently: the mask-weighted mean of per-item
//! losses). Items whose timestep falls below `t_discrete` also run the
//! discrete corner branch on the (detached) denoised estimate; its training
//! loss is per-bit binary cross-entropy, pooled the same way, while the
//! thresholded bit error rate is logged alongside. The combined loss weights
//! the two terms equally.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use floorgen_core::align::align_condition;
use floorgen_core::bubble::extract_bubble_graph;
use floorgen_core::codec::{denormalize, int2bit};
use floorgen_core::init::LayoutInit;
use floorgen_core::token::{tokenize, TokenSequence};
use floorgen_core::types::Floorplan;
use floorgen_model::{
    build_masks, ensure_config, load_checkpoint, load_named_arrays, save_checkpoint,
    save_named_arrays, BitsForward, Denoiser, Grads, MaskSet, ModelError, NoiseForward,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ops::{condition_offset, forward_sample, predict_x0, DiffusionConfig};
use crate::{DiffusionError, Result};

/// Header of the append-only loss log (tab-separated).
pub const LOSS_LOG_HEADER: &str = "step\tloss_n\tloss_r\tcombined\twall_time_s\tbit_err";

/// Consecutive bad steps (non-finite loss or numeric failure) tolerated
/// before training aborts.
pub const DIVERGENCE_STRIKES: usize = 10;

const STEP_KEY_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// One training example: a tokenized (target, aligned condition) pair with
/// its attention masks.
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub seq: TokenSequence,
    pub masks: MaskSet,
}

/// Builds a training item: aligns the coarse layout onto the target's loop
/// structure, tokenizes, and derives attention masks from the *condition's*
/// adjacency (the target's adjacency is unknown when sampling, so training
/// must not depend on it either).
pub fn prepare_item(
    target: &Floorplan,
    init: &LayoutInit,
    adjacency_eps: f64,
) -> Result<TrainItem> {
    let aligned = align_condition(target, init)?;
    let seq = tokenize(target, &aligned)?;
    let graph = extract_bubble_graph(&aligned, adjacency_eps);
    let masks = build_masks(&seq, &graph);
    Ok(TrainItem { seq, masks })
}

/// Loss values of one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    /// Mean squared noise-prediction error over non-padded coordinates.
    pub loss_n: f64,
    /// Mean per-bit binary cross-entropy of the discrete branch (0 when no
    /// item ran it).
    pub loss_r: f64,
    /// loss_n + loss_r, equally weighted.
    pub combined: f64,
    /// Thresholded bit disagreement rate, logged alongside loss_r.
    pub bit_err: f64,
}

/// One appended row of the loss history.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub loss_n: f64,
    pub loss_r: f64,
    pub combined: f64,
    pub wall_time_s: f64,
    pub bit_err: f64,
}

fn coords_array(v: &[[f64; 2]]) -> Array2<f64> {
    Array2::from_shape_fn((v.len(), 2), |(i, j)| v[i][j])
}

fn coord_rows(a: &Array2<f64>) -> Vec<[f64; 2]> {
    (0..a.nrows()).map(|i| [a[[i, 0]], a[[i, 1]]]).collect()
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct ItemBits {
    fwd: BitsForward,
    /// Unscaled d(BCE)/d(logit) = sigmoid(logit) - target bit; pads zero.
    d_logits: Array2<f64>,
}

struct ItemForward {
    fwd: NoiseForward,
    /// Unscaled residual ε̂ - ε; pads zero.
    d_eps: Array2<f64>,
    bits: Option<ItemBits>,
}

/// Losses of one batch under one RNG stream; see the module docs for the
/// draw protocol. With `grads`, accumulates d(combined)/d(params).
fn batch_losses(
    net: &Denoiser,
    batch: &[&TrainItem],
    cfg: &DiffusionConfig,
    rng: &mut ChaCha8Rng,
    grads: Option<&mut Grads>,
) -> Result<LossReport> {
    if batch.is_empty() {
        return Err(DiffusionError::Empty("empty training batch".into()));
    }
    let t_max = cfg.schedule.t_max;

    let mut items: Vec<ItemForward> = Vec::with_capacity(batch.len());
    let mut coord_count = 0usize;
    let mut bit_count = 0usize;
    let mut loss_n_sum = 0.0;
    let mut loss_r_sum = 0.0;
    let mut bit_mistakes = 0usize;

    for item in batch {
        let seq = &item.seq;
        let n = seq.len();
        // Draw protocol per item: one timestep, then per-token noise for
        // real rows in row-major order. Padding rows stay exactly zero.
        let t = rng.gen_range(1..=t_max);
        let mut noise = Array2::zeros((n, 2));
        for i in 0..n {
            if !seq.pad[i] {
                noise[[i, 0]] = StandardNormal.sample(rng);
                noise[[i, 1]] = StandardNormal.sample(rng);
            }
        }
        if seq.real_count() == 0 {
            continue;
        }

        let x0 = coords_array(&seq.coords);
        let cond = coords_array(&seq.cond_coords);
        let e_y = condition_offset(&cond, cfg);
        let x_t = forward_sample(&cfg.schedule, &x0, t, &noise, &e_y)?;
        let noisy = seq.with_coords(coord_rows(&x_t))?;
        let t_frac = t as f64 / t_max as f64;

        let fwd = net.forward_noise(&noisy, t_frac, &item.masks, cfg.reverse_cond)?;
        let d_eps = &fwd.eps_hat - &noise;
        loss_n_sum += d_eps.iter().map(|v| v * v).sum::<f64>();
        coord_count += seq.real_count() * 2;

        let bits = if t < cfg.t_discrete {
            // The continuous estimate enters the discrete branch as a
            // constant: gradients of loss_r stop at the bit logits.
            let x0_est = predict_x0(&cfg.schedule, &x_t, &fwd.eps_hat, t, &e_y)?;
            let bfwd = net.forward_bits(&noisy, &x0_est, t_frac, &item.masks, cfg.reverse_cond)?;
            let mut d_logits = Array2::zeros((n, 16));
            for i in 0..n {
                if seq.pad[i] {
                    continue;
                }
                for axis in 0..2 {
                    let target_bits = int2bit(i64::from(denormalize(seq.coords[i][axis])))?;
                    for (b, &target) in target_bits.iter().enumerate() {
                        let logit = bfwd.logits[[i, axis * 8 + b]];
                        let bit = f64::from(target);
                        loss_r_sum += softplus(logit) - bit * logit;
                        if (logit > 0.0) != (target == 1) {
                            bit_mistakes += 1;
                        }
                        d_logits[[i, axis * 8 + b]] = sigmoid(logit) - bit;
                    }
                }
            }
            bit_count += seq.real_count() * 16;
            Some(ItemBits { fwd: bfwd, d_logits })
        } else {
            None
        };
        items.push(ItemForward { fwd, d_eps, bits });
    }

    if coord_count == 0 {
        return Err(DiffusionError::Empty(
            "batch holds no real (non-padded) tokens".into(),
        ));
    }
    let loss_n = loss_n_sum / coord_count as f64;
    let (loss_r, bit_err) = if bit_count > 0 {
        (
            loss_r_sum / bit_count as f64,
            bit_mistakes as f64 / bit_count as f64,
        )
    } else {
        (0.0, 0.0)
    };

    if let Some(grads) = grads {
        let coord_scale = 2.0 / coord_count as f64;
        let bit_scale = if bit_count > 0 {
            1.0 / bit_count as f64
        } else {
            0.0
        };
        for item in &items {
            let d = &item.d_eps * coord_scale;
            net.backward_noise(&item.fwd, &d, grads);
            if let Some(bits) = &item.bits {
                let dl = &bits.d_logits * bit_scale;
                net.backward_bits(&bits.fwd, &dl, grads);
            }
        }
    }

    Ok(LossReport {
        loss_n,
        loss_r,
        combined: loss_n + loss_r,
        bit_err,
    })
}

/// Losses of one batch without touching gradients.
pub fn training_losses(
    net: &Denoiser,
    batch: &[TrainItem],
    cfg: &DiffusionConfig,
    rng: &mut ChaCha8Rng,
) -> Result<LossReport> {
    let refs: Vec<&TrainItem> = batch.iter().collect();
    batch_losses(net, &refs, cfg, rng, None)
}

// --- optimizer --------------------------------------------------------------

/// Adam with decoupled weight decay. Decay skips single-row parameters
/// (biases, layer-norm gains, timestep rows), the usual no-decay set.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step_count: u64,
    m: BTreeMap<String, Array2<f64>>,
    v: BTreeMap<String, Array2<f64>>,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> AdamW {
        AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step_count: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One update. Parameters without a gradient entry this step are treated
    /// as having a zero gradient (their moments still decay), keeping the
    /// update deterministic regardless of which branches ran.
    pub fn step(&mut self, params: &mut BTreeMap<String, Array2<f64>>, grads: &Grads) {
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let zero_grad = Array2::zeros((0, 0));
        for (name, w) in params.iter_mut() {
            let g = grads.get(name).unwrap_or(&zero_grad);
            let m = self
                .m
                .entry(name.clone())
                .or_insert_with(|| Array2::zeros(w.raw_dim()));
            let v = self
                .v
                .entry(name.clone())
                .or_insert_with(|| Array2::zeros(w.raw_dim()));
            // Decoupled decay acts on the pre-update weights.
            let decay = if w.nrows() > 1 {
                1.0 - self.lr * self.weight_decay
            } else {
                1.0
            };
            for (idx, wv) in w.indexed_iter_mut() {
                let gv = if g.is_empty() { 0.0 } else { g[idx] };
                let mv = self.beta1 * m[idx] + (1.0 - self.beta1) * gv;
                let vv = self.beta2 * v[idx] + (1.0 - self.beta2) * gv * gv;
                m[idx] = mv;
                v[idx] = vv;
                let m_hat = mv / bc1;
                let v_hat = vv / bc2;
                *wv = *wv * decay - self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }

    /// Serializable view of the optimizer state: per-parameter first and
    /// second moments plus the step counter.
    pub fn to_arrays(&self) -> BTreeMap<String, Array2<f64>> {
        let mut out = BTreeMap::new();
        for (name, value) in &self.m {
            out.insert(format!("m.{name}"), value.clone());
        }
        for (name, value) in &self.v {
            out.insert(format!("v.{name}"), value.clone());
        }
        out.insert(
            "step_count".to_string(),
            Array2::from_elem((1, 1), self.step_count as f64),
        );
        out
    }

    /// Checks that every stored moment matches the shape of the parameter it
    /// belongs to (parameters without stored moments are fine — they start
    /// at zero).
    pub fn validate_against(&self, params: &BTreeMap<String, Array2<f64>>) -> Result<()> {
        for (kind, table) in [("m", &self.m), ("v", &self.v)] {
            for (name, value) in table {
                match params.get(name) {
                    None => {
                        return Err(DiffusionError::Config(format!(
                            "optimizer moment {kind}.{name} has no matching parameter"
                        )))
                    }
                    Some(w) if w.raw_dim() != value.raw_dim() => {
                        return Err(DiffusionError::Config(format!(
                            "optimizer moment {kind}.{name} has shape {:?}, parameter has {:?}",
                            value.dim(),
                            w.dim()
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    /// Rebuilds optimizer state written by [`AdamW::to_arrays`];
    /// hyperparameters come from the current configuration.
    pub fn from_arrays(
        lr: f64,
        weight_decay: f64,
        arrays: BTreeMap<String, Array2<f64>>,
    ) -> Result<AdamW> {
        let mut opt = AdamW::new(lr, weight_decay);
        for (name, value) in arrays {
            if name == "step_count" {
                let raw = value
                    .first()
                    .copied()
                    .ok_or_else(|| DiffusionError::Config("empty step counter".into()))?;
                if !(raw.is_finite() && raw >= 0.0 && raw.fract() == 0.0) {
                    return Err(DiffusionError::Config(format!(
                        "invalid optimizer step counter {raw}"
                    )));
                }
                opt.step_count = raw as u64;
            } else if let Some(param) = name.strip_prefix("m.") {
                opt.m.insert(param.to_string(), value);
            } else if let Some(param) = name.strip_prefix("v.") {
                opt.v.insert(param.to_string(), value);
            } else {
                return Err(DiffusionError::Config(format!(
                    "unrecognized optimizer state entry {name}"
                )));
            }
        }
        Ok(opt)
    }
}

// --- training loop ----------------------------------------------------------

/// Loop hyperparameters and persistence hooks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Total optimizer steps the run should end at (resume continues toward
    /// this count).
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Checkpoint every this many steps (and at the end); 0 = final only.
    pub checkpoint_interval: usize,
    /// Network checkpoint path; optimizer moments live next to it with an
    /// `.opt` suffix appended. Resuming happens automatically when the file
    /// already exists.
    pub checkpoint_path: Option<PathBuf>,
    /// Append-only loss log path.
    pub loss_log_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            steps: 500,
            batch_size: 16,
            lr: 1e-3,
            weight_decay: 1e-2,
            seed: 0,
            checkpoint_interval: 100,
            checkpoint_path: None,
            loss_log_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(DiffusionError::Config("steps must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(DiffusionError::Config("batch_size must be >= 1".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(DiffusionError::Config(format!(
                "lr must be a nonnegative finite number, got {}",
                self.lr
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(DiffusionError::Config(format!(
                "weight_decay must be a nonnegative finite number, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

/// Final state of a training run. `history` holds the records appended by
/// *this* run (a resumed run starts after the checkpointed step).
#[derive(Debug)]
pub struct TrainState {
    pub net: Denoiser,
    pub optimizer: AdamW,
    /// Last completed optimizer step.
    pub step: usize,
    pub seed: u64,
    pub history: Vec<LossRecord>,
}

/// Path of the optimizer-moment table stored beside a checkpoint.
pub fn moments_path(checkpoint: &Path) -> PathBuf {
    let mut os = checkpoint.as_os_str().to_os_string();
    os.push(".opt");
    PathBuf::from(os)
}

/// RNG stream of the training step whose batch starts at `position`.
fn step_rng(seed: u64, position: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (position.wrapping_add(1)).wrapping_mul(STEP_KEY_MIX))
}

struct LossLog {
    writer: Option<BufWriter<std::fs::File>>,
}

impl LossLog {
    fn open(path: Option<&Path>) -> Result<LossLog> {
        let Some(path) = path else {
            return Ok(LossLog { writer: None });
        };
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut writer = BufWriter::new(file);
        if fresh {
            writeln!(writer, "{LOSS_LOG_HEADER}")?;
        }
        Ok(LossLog {
            writer: Some(writer),
        })
    }

    fn append(&mut self, rec: &LossRecord) -> Result<()> {
        if let Some(w) = &mut self.writer {
            writeln!(
                w,
                "{}\t{:.9}\t{:.9}\t{:.9}\t{:.3}\t{:.9}",
                rec.step, rec.loss_n, rec.loss_r, rec.combined, rec.wall_time_s, rec.bit_err
            )?;
            w.flush()?;
        }
        Ok(())
    }
}

fn save_state(
    net: &Denoiser,
    opt: &AdamW,
    step: usize,
    seed: u64,
    path: &Path,
) -> Result<()> {
    let meta = serde_json::json!({ "step": step, "seed": seed });
    save_checkpoint(net, &meta, path)?;
    save_named_arrays(&opt.to_arrays(), &moments_path(path))?;
    Ok(())
}

/// Runs (or resumes) training of `net` on `dataset` up to `tcfg.steps`.
///
/// When `tcfg.checkpoint_path` names an existing checkpoint, the network and
/// optimizer are restored from it and the same-seed run continues exactly
/// where it stopped; the result is bit-identical to never having stopped.
///
/// Steps whose loss is non-finite (or whose forward pass fails numerically)
/// skip the parameter update; [`DIVERGENCE_STRIKES`] such steps in a row
/// abort with a divergence error.
pub fn train(
    net: Denoiser,
    dataset: &[TrainItem],
    cfg: &DiffusionConfig,
    tcfg: &TrainConfig,
) -> Result<TrainState> {
    cfg.validate()?;
    tcfg.validate()?;
    if dataset.is_empty() {
        return Err(DiffusionError::Empty("empty training dataset".into()));
    }

    let mut net = net;
    let mut opt = AdamW::new(tcfg.lr, tcfg.weight_decay);
    let mut completed = 0usize;
    if let Some(path) = &tcfg.checkpoint_path {
        if path.exists() {
            let (loaded, meta) = load_checkpoint(path)?;
            ensure_config(&loaded.config, &net.config)?;
            let step = meta
                .get("step")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| {
                    DiffusionError::Config("checkpoint metadata lacks a step count".into())
                })? as usize;
            if let Some(stored) = meta.get("seed").and_then(|v| v.as_u64()) {
                if stored != tcfg.seed {
                    return Err(DiffusionError::Config(format!(
                        "checkpoint was trained with seed {stored}, configured seed is {}",
                        tcfg.seed
                    )));
                }
            }
            let mpath = moments_path(path);
            if !mpath.exists() {
                return Err(DiffusionError::Config(format!(
                    "checkpoint {} has no optimizer state at {}; cannot resume exactly",
                    path.display(),
                    mpath.display()
                )));
            }
            opt = AdamW::from_arrays(tcfg.lr, tcfg.weight_decay, load_named_arrays(&mpath)?)?;
            opt.validate_against(&loaded.params)?;
            net = loaded;
            completed = step;
        }
    }

    let mut log = LossLog::open(tcfg.loss_log_path.as_deref())?;
    let mut history: Vec<LossRecord> = Vec::new();
    let mut strikes = 0usize;
    let n = dataset.len();
    let mut step = completed;

    while step < tcfg.steps {
        step += 1;
        let start = (step - 1) * tcfg.batch_size;
        let position = (start % n) as u64;
        let mut rng = step_rng(tcfg.seed, position);
        let batch: Vec<&TrainItem> = (0..tcfg.batch_size)
            .map(|i| &dataset[(start + i) % n])
            .collect();

        let clock = Instant::now();
        let mut grads: Grads = BTreeMap::new();
        let outcome = batch_losses(&net, &batch, cfg, &mut rng, Some(&mut grads));
        let report = match outcome {
            Ok(report) => report,
            Err(DiffusionError::Numeric(_)) | Err(DiffusionError::Model(ModelError::Numeric(_))) => {
                LossReport {
                    loss_n: f64::NAN,
                    loss_r: f64::NAN,
                    combined: f64::NAN,
                    bit_err: f64::NAN,
                }
            }
            Err(e) => return Err(e),
        };

        if report.combined.is_finite() {
            strikes = 0;
            opt.step(&mut net.params, &grads);
        } else {
            strikes += 1;
        }

        let rec = LossRecord {
            step,
            loss_n: report.loss_n,
            loss_r: report.loss_r,
            combined: report.combined,
            wall_time_s: clock.elapsed().as_secs_f64(),
            bit_err: report.bit_err,
        };
        log.append(&rec)?;
        history.push(rec);

        if strikes >= DIVERGENCE_STRIKES {
            return Err(DiffusionError::Diverged { steps: strikes });
        }

        let due = (tcfg.checkpoint_interval > 0 && step.is_multiple_of(tcfg.checkpoint_interval))
            || step == tcfg.steps;
        if due {
            if let Some(path) = &tcfg.checkpoint_path {
                save_state(&net, &opt, step, tcfg.seed, path)?;
            }
        }
    }

    Ok(TrainState {
        net,
        optimizer: opt,
        step,
        seed: tcfg.seed,
        history,
    })
}
