//! Finite-difference verification of the hand-written backward passes.
//!
//! The probe loss is `L = 0.5 * sum(eps_hat^2) + 0.5 * sum(logits^2)` over a
//! small token batch, with the discrete branch fed a fixed random coordinate
//! estimate.  Analytic gradients come from the network's own backward pass;
//! numeric gradients from central differences in full double precision.
//!
//! The check needs decoding heads with nonzero weights (see
//! [`Denoiser::randomize_heads`]): fresh networks initialise both heads to
//! zero, which makes every output — and every gradient — vanish identically,
//! so the comparison would be trivially `0 ≈ 0`.

use crate::denoiser::{Denoiser, Grads};
use crate::features::MaskSet;
use crate::{ModelError, Result};
use floorgen_core::token::TokenSequence;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest relative error over all checked weights.
    pub max_relative_error: f64,
    /// Number of weights actually compared.
    pub checked: usize,
    /// Parameter holding the worst weight.
    pub worst_name: String,
}

/// Weights whose analytic and numeric gradients are both below this magnitude
/// are skipped: they carry no signal and their quotient is dominated by
/// floating-point noise.
const MEANINGFUL: f64 = 1e-5;

fn probe_loss(
    net: &Denoiser,
    seq: &TokenSequence,
    x0_est: &Array2<f64>,
    t_frac: f64,
    masks: &MaskSet,
) -> Result<f64> {
    let eps = net.predict_noise(seq, t_frac, masks, true)?;
    let logits = net.predict_bits(seq, x0_est, t_frac, masks, true)?;
    Ok(0.5 * eps.iter().map(|v| v * v).sum::<f64>()
        + 0.5 * logits.iter().map(|v| v * v).sum::<f64>())
}

fn analytic_gradients(
    net: &Denoiser,
    seq: &TokenSequence,
    x0_est: &Array2<f64>,
    t_frac: f64,
    masks: &MaskSet,
) -> Result<Grads> {
    let mut grads = Grads::new();
    let fwd = net.forward_noise(seq, t_frac, masks, true)?;
    let d_eps = fwd.eps_hat.clone();
    net.backward_noise(&fwd, &d_eps, &mut grads);
    let fwd = net.forward_bits(seq, x0_est, t_frac, masks, true)?;
    let d_logits = fwd.logits.clone();
    net.backward_bits(&fwd, &d_logits, &mut grads);
    Ok(grads)
}

#[allow(clippy::too_many_arguments)]
fn run(
    net: &mut Denoiser,
    seq: &TokenSequence,
    masks: &MaskSet,
    t_frac: f64,
    epsilon: f64,
    min_weights: usize,
    seed: u64,
    analytic_scale: f64,
) -> Result<GradCheckReport> {
    if epsilon <= 0.0 {
        return Err(ModelError::Config("epsilon must be positive".into()));
    }
    if min_weights == 0 {
        return Err(ModelError::Config("min_weights must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0_est = Array2::from_shape_fn((seq.len(), 2), |_| rng.gen_range(-1.0..1.0));

    let grads = analytic_gradients(net, seq, &x0_est, t_frac, masks)?;

    // Flat index space over every scalar parameter.
    let layout: Vec<(String, usize, usize)> = net
        .params
        .iter()
        .map(|(name, v)| (name.clone(), v.nrows(), v.ncols()))
        .collect();
    let total: usize = layout.iter().map(|(_, r, c)| r * c).sum();

    let mut checked = 0usize;
    let mut max_err = 0.0f64;
    let mut worst = String::new();
    let budget = min_weights * 50;
    let mut attempts = 0usize;
    while checked < min_weights && attempts < budget {
        attempts += 1;
        let mut flat = rng.gen_range(0..total);
        let mut picked = None;
        for (name, rows, cols) in &layout {
            let size = rows * cols;
            if flat < size {
                picked = Some((name.clone(), flat / cols, flat % cols));
                break;
            }
            flat -= size;
        }
        let (name, i, j) = picked.expect("flat index in range");

        let analytic = grads.get(&name).map_or(0.0, |g| g[[i, j]]) * analytic_scale;

        let w = net.params[&name][[i, j]];
        let h = epsilon * w.abs().max(1.0);
        net.params.get_mut(&name).expect("exists")[[i, j]] = w + h;
        let plus = probe_loss(net, seq, &x0_est, t_frac, masks)?;
        net.params.get_mut(&name).expect("exists")[[i, j]] = w - h;
        let minus = probe_loss(net, seq, &x0_est, t_frac, masks)?;
        net.params.get_mut(&name).expect("exists")[[i, j]] = w;
        let numeric = (plus - minus) / (2.0 * h);

        if analytic.abs().max(numeric.abs()) < MEANINGFUL {
            continue;
        }
        let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        if err > max_err {
            max_err = err;
            worst = format!("{name}[{i},{j}]");
        }
        checked += 1;
    }

    if checked < min_weights {
        return Err(ModelError::Numeric(format!(
            "only {checked} of {min_weights} sampled weights carried gradient signal; \
             randomize the decoding heads before checking"
        )));
    }
    Ok(GradCheckReport {
        max_relative_error: max_err,
        checked,
        worst_name: worst,
    })
}

/// Compares analytic and central-difference gradients on `min_weights`
/// randomly sampled weights and reports the worst relative error.
#[allow(clippy::too_many_arguments)]
pub fn gradient_check(
    net: &mut Denoiser,
    seq: &TokenSequence,
    masks: &MaskSet,
    t_frac: f64,
    epsilon: f64,
    min_weights: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    run(net, seq, masks, t_frac, epsilon, min_weights, seed, 1.0)
}

/// Negative control: the same comparison with every analytic gradient scaled
/// by 1.5, which must produce a large relative error if the check has teeth.
#[allow(clippy::too_many_arguments)]
pub fn corrupted_gradient_check(
    net: &mut Denoiser,
    seq: &TokenSequence,
    masks: &MaskSet,
    t_frac: f64,
    epsilon: f64,
    min_weights: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    run(net, seq, masks, t_frac, epsilon, min_weights, seed, 1.5)
}
