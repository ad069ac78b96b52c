//! Forward and reverse diffusion steps over per-token coordinate arrays.
//!
//! States are `(token_count, 2)` arrays of normalized coordinates. The
//! forward process mixes signal and noise and adds a conditioning offset
//! `e(y)`; the reverse process reconstructs a denoised estimate from a noise
//! prediction and walks the state toward it.
//!
//! Conditioning enters twice, and the two entry points are independently
//! switchable:
//!
//! * **forward conditioning** adds `e(y) = cond_rate x condition coordinates`
//!   to every forward (and reinjected reverse) state;
//! * **reverse conditioning** feeds the condition coordinates to the
//!   denoiser's cross-attention inputs (handled by the caller via the
//!   network's `cond_enabled` flag).
//!
//! With both disabled the operations reduce term-for-term to the standard
//! unconditional closed forms.

use ndarray::Array2;

use crate::schedule::NoiseSchedule;
use crate::{DiffusionError, Result};

/// ᾱ values below this make state reconstruction ill-conditioned and are
/// rejected rather than divided by.
pub const ALPHA_BAR_MIN: f64 = 1e-8;

/// Geometric slack (grid units) used when extracting adjacency graphs for
/// attention masks; matches the evaluation default.
pub const DEFAULT_ADJACENCY_EPS: f64 = 2.0;

/// Engine configuration: schedule plus conditioning and sampling knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig {
    pub schedule: NoiseSchedule,
    /// Scale of the forward conditioning offset e(y). Default 1e-1.
    pub cond_rate: f64,
    /// Enables the forward offset e(y).
    pub forward_cond: bool,
    /// Enables condition inputs to the denoiser (reverse conditioning).
    pub reverse_cond: bool,
    /// Timesteps strictly below this run the discrete corner branch.
    /// Default T/32, at least 1.
    pub t_discrete: usize,
    /// Reverse-step stride while sampling; 1 visits every timestep.
    pub sample_stride: usize,
    /// Draw fresh residual noise at each reverse step instead of reusing the
    /// model's noise estimate (ancestral-style). Default off: the sampler is
    /// deterministic given its start noise.
    pub stochastic_sampling: bool,
}

impl DiffusionConfig {
    /// Defaults for a given schedule: rate 1e-1, both conditioning paths on,
    /// t_discrete = T/32 (at least 1), stride 1, deterministic updates.
    pub fn new(schedule: NoiseSchedule) -> DiffusionConfig {
        let t_discrete = (schedule.t_max / 32).max(1);
        DiffusionConfig {
            schedule,
            cond_rate: 1e-1,
            forward_cond: true,
            reverse_cond: true,
            t_discrete,
            sample_stride: 1,
            stochastic_sampling: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.cond_rate >= 0.0 && self.cond_rate.is_finite()) {
            return Err(DiffusionError::Config(format!(
                "cond_rate must be a nonnegative finite number, got {}",
                self.cond_rate
            )));
        }
        if self.t_discrete < 1 || self.t_discrete > self.schedule.t_max {
            return Err(DiffusionError::Config(format!(
                "t_discrete must lie in [1, {}], got {}",
                self.schedule.t_max, self.t_discrete
            )));
        }
        if self.sample_stride < 1 {
            return Err(DiffusionError::Config("sample_stride must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_step(schedule: &NoiseSchedule, t: usize) -> Result<()> {
    if t < 1 || t > schedule.t_max {
        return Err(DiffusionError::Config(format!(
            "timestep {t} outside [1, {}]",
            schedule.t_max
        )));
    }
    Ok(())
}

fn check_shapes(what: &str, a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(DiffusionError::Shape(format!(
            "{what}: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// The forward conditioning offset e(y): `cond_rate x cond_coords` when
/// forward conditioning is on, the zero field otherwise.
pub fn condition_offset(cond_coords: &Array2<f64>, cfg: &DiffusionConfig) -> Array2<f64> {
    if cfg.forward_cond {
        cond_coords * cfg.cond_rate
    } else {
        Array2::zeros(cond_coords.raw_dim())
    }
}

/// Forward marginal: `x_t = sqrt(ᾱ_t) x0 + sqrt(1-ᾱ_t) ε + e(y)`.
pub fn forward_sample(
    schedule: &NoiseSchedule,
    x0: &Array2<f64>,
    t: usize,
    noise: &Array2<f64>,
    e_y: &Array2<f64>,
) -> Result<Array2<f64>> {
    check_step(schedule, t)?;
    check_shapes("x0 vs noise", x0, noise)?;
    check_shapes("x0 vs offset", x0, e_y)?;
    let ab = schedule.alpha_bar(t);
    Ok(x0 * ab.sqrt() + noise * (1.0 - ab).sqrt() + e_y)
}

/// Denoised estimate: `x̂0 = (x_t - e(y) - sqrt(1-ᾱ_t) ε̂) / sqrt(ᾱ_t)`,
/// clamped to the coordinate domain [-1, 1].
///
/// The clamp makes early, badly-conditioned estimates safe for both the
/// discrete corner branch and reverse reinjection; it never alters exact
/// inversions because true coordinates already live in [-1, 1].
pub fn predict_x0(
    schedule: &NoiseSchedule,
    x_t: &Array2<f64>,
    eps_hat: &Array2<f64>,
    t: usize,
    e_y: &Array2<f64>,
) -> Result<Array2<f64>> {
    check_step(schedule, t)?;
    check_shapes("x_t vs noise estimate", x_t, eps_hat)?;
    check_shapes("x_t vs offset", x_t, e_y)?;
    let ab = schedule.alpha_bar(t);
    if ab < ALPHA_BAR_MIN {
        return Err(DiffusionError::Numeric(format!(
            "alpha_bar({t}) = {ab} is below {ALPHA_BAR_MIN}; estimate would be ill-conditioned"
        )));
    }
    let mut x0 = (x_t - e_y - &(eps_hat * (1.0 - ab).sqrt())) / ab.sqrt();
    x0.mapv_inplace(|v| v.clamp(-1.0, 1.0));
    Ok(x0)
}

/// Applies the reverse update from a denoised estimate:
/// `x_{t_next} = sqrt(ᾱ_{t_next}) x̂0 + sqrt(1-ᾱ_{t_next}) residual + e(y)`,
/// reinjecting e(y) so reverse states match forward statistics at equal t.
/// `t_next = 0` ends the chain and returns the estimate itself.
pub fn reverse_from_estimate(
    schedule: &NoiseSchedule,
    x0_hat: &Array2<f64>,
    t_next: usize,
    residual: &Array2<f64>,
    e_y: &Array2<f64>,
) -> Result<Array2<f64>> {
    if t_next > schedule.t_max {
        return Err(DiffusionError::Config(format!(
            "timestep {t_next} outside [0, {}]",
            schedule.t_max
        )));
    }
    if t_next == 0 {
        return Ok(x0_hat.clone());
    }
    check_shapes("estimate vs residual", x0_hat, residual)?;
    check_shapes("estimate vs offset", x0_hat, e_y)?;
    let ab = schedule.alpha_bar(t_next);
    Ok(x0_hat * ab.sqrt() + residual * (1.0 - ab).sqrt() + e_y)
}

/// One reverse step `t -> t-1`: reconstructs x̂0 from the noise estimate and
/// walks there, reusing the estimate as the residual (deterministic update).
pub fn reverse_step(
    schedule: &NoiseSchedule,
    x_t: &Array2<f64>,
    t: usize,
    eps_hat: &Array2<f64>,
    e_y: &Array2<f64>,
) -> Result<Array2<f64>> {
    check_step(schedule, t)?;
    let x0_hat = predict_x0(schedule, x_t, eps_hat, t, e_y)?;
    reverse_from_estimate(schedule, &x0_hat, t - 1, eps_hat, e_y)
}
