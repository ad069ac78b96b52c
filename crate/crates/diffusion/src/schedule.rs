//! Noise intensity schedules.
//!
//! A schedule holds the cumulative signal fractions ᾱ_0..ᾱ_T: ᾱ_0 = 1 (no
//! noise), strictly decreasing, with ᾱ_T at or below [`ALPHA_BAR_FLOOR_END`]
//! (essentially pure noise). Both families are floored by the geometric curve
//! `floor(t) = end^(t/T)`, which itself decays strictly from 1 to `end`; the
//! floor is what guarantees ᾱ_T hits the endpoint exactly and keeps √ᾱ_t
//! comfortably away from zero at every step, so state reconstruction from a
//! noise estimate stays well-conditioned over the whole chain.

use serde::{Deserialize, Serialize};

use crate::{DiffusionError, Result};

/// Upper bound required of ᾱ_T; both built-in schedules land on it exactly.
pub const ALPHA_BAR_FLOOR_END: f64 = 1e-4;

/// Offset of the squared-cosine curve (keeps ᾱ_1 close to 1).
const COSINE_OFFSET: f64 = 0.008;

/// Schedule family. Cosine is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Cosine,
    Linear,
}

/// Cumulative signal fractions of a diffusion process with `t_max` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    /// Step count T; valid timesteps are 1..=t_max.
    pub t_max: usize,
    /// ᾱ_0..ᾱ_T, length t_max + 1.
    pub alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    /// ᾱ_t. Panics on out-of-range t; step arguments are validated by the
    /// process operations before lookup.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    /// Checks the schedule invariants: length, endpoints, strict decrease.
    pub fn validate(&self) -> Result<()> {
        if self.t_max < 2 {
            return Err(DiffusionError::Config(format!(
                "schedule needs at least 2 steps, got {}",
                self.t_max
            )));
        }
        if self.alpha_bar.len() != self.t_max + 1 {
            return Err(DiffusionError::Config(format!(
                "schedule of {} steps must hold {} values, got {}",
                self.t_max,
                self.t_max + 1,
                self.alpha_bar.len()
            )));
        }
        if self.alpha_bar[0] != 1.0 {
            return Err(DiffusionError::Config(format!(
                "schedule must start at 1, got {}",
                self.alpha_bar[0]
            )));
        }
        let last = self.alpha_bar[self.t_max];
        if !(last > 0.0 && last <= ALPHA_BAR_FLOOR_END) {
            return Err(DiffusionError::Config(format!(
                "schedule must end in (0, {ALPHA_BAR_FLOOR_END}], got {last}"
            )));
        }
        for t in 1..=self.t_max {
            let (prev, cur) = (self.alpha_bar[t - 1], self.alpha_bar[t]);
            if !(cur.is_finite() && cur < prev) {
                return Err(DiffusionError::Config(format!(
                    "schedule must strictly decrease, violated at step {t}: {prev} -> {cur}"
                )));
            }
        }
        Ok(())
    }
}

/// Builds a schedule of `t_max` steps. `t_max` must be at least 2.
pub fn make_schedule(t_max: usize, kind: ScheduleKind) -> Result<NoiseSchedule> {
    if t_max < 2 {
        return Err(DiffusionError::Config(format!(
            "schedule needs at least 2 steps, got {t_max}"
        )));
    }
    let floor = |t: usize| ALPHA_BAR_FLOOR_END.powf(t as f64 / t_max as f64);
    let alpha_bar: Vec<f64> = match kind {
        ScheduleKind::Cosine => {
            let curve = |t: usize| {
                let arg = (t as f64 / t_max as f64 + COSINE_OFFSET) / (1.0 + COSINE_OFFSET)
                    * std::f64::consts::FRAC_PI_2;
                arg.cos().powi(2)
            };
            let base = curve(0);
            (0..=t_max).map(|t| (curve(t) / base).max(floor(t))).collect()
        }
        ScheduleKind::Linear => (0..=t_max)
            .map(|t| {
                let frac = t as f64 / t_max as f64;
                ((1.0 - frac) + frac * ALPHA_BAR_FLOOR_END).max(floor(t))
            })
            .collect(),
    };
    let schedule = NoiseSchedule { t_max, alpha_bar };
    schedule.validate()?;
    Ok(schedule)
}
