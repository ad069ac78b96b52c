//! Fréchet distance between two sets of floorplans ("frechet-rp64").
//!
//! Each plan is rasterized to a type-labeled grid, viewed as a 25-channel
//! one-hot occupancy volume, and pushed through a fixed pseudo-random linear
//! projection to a 64-dimensional feature vector. Each set's features are
//! summarized by mean and covariance, and the squared Fréchet distance
//! between the two implied Gaussians is returned:
//!
//! ```text
//! |mu_a - mu_b|^2 + tr(Sig_a + Sig_b - 2 (Sig_a Sig_b)^(1/2))
//! ```
//!
//! The projection depends only on (resolution, seed), so scores are
//! reproducible across runs and machines. Covariances are shrunk before the
//! matrix square root: a small ridge is always added, and for sets smaller
//! than [`SHRINKAGE_SATURATION`] the covariance is blended toward a scaled
//! identity, so the score stays finite and stable far below the 65 samples a
//! full-rank 64-dimensional estimate would need.

use floorgen_core::raster::rasterize;
use floorgen_core::types::{Floorplan, ROOM_TYPE_COUNT};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{MetricsError, Result};

/// Width of the projected feature vector.
pub const FEATURE_DIM: usize = 64;

/// Grid edge length the default extractor rasterizes plans at.
pub const DEFAULT_FEATURE_RESOLUTION: usize = 32;

/// Seed of the default projection ("RP64" in ASCII).
pub const DEFAULT_FEATURE_SEED: u64 = 0x5250_3634;

/// Ridge added to every covariance diagonal before the square root.
pub const COVARIANCE_EPS: f64 = 1e-6;

/// Set size at which the identity blend vanishes (= FEATURE_DIM + 1, the
/// smallest count with a chance at a full-rank covariance).
pub const SHRINKAGE_SATURATION: usize = 65;

/// Deterministic plan-to-feature map: a fixed random projection of the
/// 25-channel rasterized type grid down to [`FEATURE_DIM`] values.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub resolution: usize,
    pub seed: u64,
    /// (25 * resolution^2, FEATURE_DIM), row-major, fully determined by
    /// (resolution, seed).
    projection: Array2<f64>,
}

impl FeatureExtractor {
    pub fn new(resolution: usize, seed: u64) -> FeatureExtractor {
        let input_dim = ROOM_TYPE_COUNT * resolution * resolution;
        let scale = 1.0 / (input_dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..input_dim * FEATURE_DIM)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect();
        let projection = Array2::from_shape_vec((input_dim, FEATURE_DIM), data)
            .expect("projection dimensions are consistent by construction");
        FeatureExtractor {
            resolution,
            seed,
            projection,
        }
    }

    /// One feature row per plan, in input order.
    pub fn features(&self, plans: &[Floorplan]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((plans.len(), FEATURE_DIM));
        for (n, plan) in plans.iter().enumerate() {
            let grid = rasterize(plan, self.resolution)?;
            let pixels = self.resolution * self.resolution;
            let mut row = out.row_mut(n);
            for (p, &label) in grid.labels.iter().enumerate() {
                if label < 0 {
                    continue;
                }
                let channel = plan.rooms[label as usize].room_type.id();
                let input = channel * pixels + p;
                row += &self.projection.row(input);
            }
        }
        Ok(out)
    }
}

impl Default for FeatureExtractor {
    fn default() -> FeatureExtractor {
        FeatureExtractor::new(DEFAULT_FEATURE_RESOLUTION, DEFAULT_FEATURE_SEED)
    }
}

/// Unbiased covariance with ridge and small-set identity blending.
fn shrunk_covariance(features: ArrayView2<f64>) -> Array2<f64> {
    let n = features.nrows();
    let d = features.ncols();
    let mean = features.mean_axis(Axis(0)).expect("n >= 2 checked by caller");
    let centered = &features - &mean.view().insert_axis(Axis(0));
    let mut cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    for i in 0..d {
        cov[[i, i]] += COVARIANCE_EPS;
    }
    if n < SHRINKAGE_SATURATION {
        let lambda = (SHRINKAGE_SATURATION - n) as f64 / SHRINKAGE_SATURATION as f64;
        let target = cov.diag().sum() / d as f64;
        cov.mapv_inplace(|v| v * (1.0 - lambda));
        for i in 0..d {
            cov[[i, i]] += lambda * target;
        }
    }
    cov
}

fn to_dmatrix(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_row_iterator(m.nrows(), m.ncols(), m.iter().cloned())
}

/// Symmetric PSD square root via eigendecomposition; tiny negative
/// eigenvalues from round-off are clamped to zero.
fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// tr((Sig_a Sig_b)^(1/2)), computed on the equivalent symmetric product
/// (Sig_b^(1/2) Sig_a Sig_b^(1/2))^(1/2).
fn trace_sqrt_product(cov_a: &DMatrix<f64>, cov_b: &DMatrix<f64>) -> f64 {
    let sb = sym_sqrt(cov_b);
    let inner = &sb * cov_a * &sb;
    let eig = inner.symmetric_eigen();
    eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum()
}

/// Squared Fréchet distance between Gaussian summaries of two feature sets.
/// Rows are samples; both sets need at least 2 rows and equal widths.
pub fn frechet_from_features(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    for rows in [a.nrows(), b.nrows()] {
        if rows < 2 {
            return Err(MetricsError::SmallSet {
                count: rows,
                need: 2,
            });
        }
    }
    if a.ncols() != b.ncols() {
        return Err(MetricsError::Shape(format!(
            "feature widths differ: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }

    let mean_a: Array1<f64> = a.mean_axis(Axis(0)).expect("nonempty");
    let mean_b: Array1<f64> = b.mean_axis(Axis(0)).expect("nonempty");
    let mean_term: f64 = mean_a
        .iter()
        .zip(mean_b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();

    let cov_a = to_dmatrix(&shrunk_covariance(a));
    let cov_b = to_dmatrix(&shrunk_covariance(b));
    let trace_term = cov_a.trace() + cov_b.trace() - 2.0 * trace_sqrt_product(&cov_a, &cov_b);

    Ok((mean_term + trace_term).max(0.0))
}

/// Fréchet distance between two plan sets under a shared feature extractor.
pub fn frechet_diversity(
    set_a: &[Floorplan],
    set_b: &[Floorplan],
    fx: &FeatureExtractor,
) -> Result<f64> {
    let fa = fx.features(set_a)?;
    let fb = fx.features(set_b)?;
    frechet_from_features(fa.view(), fb.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use floorgen_core::types::{Corner, Loop, RoomType};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_distr::Normal;

    fn rect(t: RoomType, x0: u8, y0: u8, x1: u8, y1: u8) -> Loop {
        Loop::new(
            t,
            vec![
                Corner::new(x0, y0),
                Corner::new(x1, y0),
                Corner::new(x1, y1),
                Corner::new(x0, y1),
            ],
        )
    }

    fn base_plans() -> Vec<Floorplan> {
        let types = [
            RoomType::LivingRoom,
            RoomType::Bedroom,
            RoomType::Kitchen,
            RoomType::Bathroom,
        ];
        let mut plans = Vec::new();
        for k in 0..8u8 {
            let off = 6 * k;
            plans.push(
                Floorplan::new(vec![
                    rect(types[(k % 4) as usize], 10 + off, 10, 110 + off, 90),
                    rect(types[((k + 1) % 4) as usize], 10 + off, 100, 110 + off, 180),
                ])
                .unwrap(),
            );
        }
        plans
    }

    fn jittered(plans: &[Floorplan], amount: i16, seed: u64) -> Vec<Floorplan> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        plans
            .iter()
            .map(|p| {
                let rooms = p
                    .rooms
                    .iter()
                    .map(|lp| {
                        let corners = lp
                            .corners
                            .iter()
                            .map(|c| {
                                let dx = rng.gen_range(-amount..=amount);
                                let dy = rng.gen_range(-amount..=amount);
                                Corner::new(
                                    (c.x as i16 + dx).clamp(0, 255) as u8,
                                    (c.y as i16 + dy).clamp(0, 255) as u8,
                                )
                            })
                            .collect();
                        Loop::new(lp.room_type, corners)
                    })
                    .collect();
                Floorplan::new(rooms).unwrap()
            })
            .collect()
    }

    #[test]
    fn identical_sets_score_near_zero() {
        let fx = FeatureExtractor::default();
        let plans = base_plans();
        let d = frechet_diversity(&plans, &plans, &fx).unwrap();
        assert!(d < 1e-6, "got {d}");
    }

    #[test]
    fn one_dimensional_mean_shift_scores_its_square() {
        let delta = 0.37;
        let a = array![[0.0], [1.0], [2.0]];
        let b = array![[delta], [1.0 + delta], [2.0 + delta]];
        let d = frechet_from_features(a.view(), b.view()).unwrap();
        assert!((d - delta * delta).abs() < 1e-9, "got {d}");
    }

    #[test]
    fn matches_gaussian_closed_form_at_n_1000() {
        // X ~ N(0, I_4), Y ~ N(5*1, 4*I_4): per-dimension closed form is
        // 25 + (1 + 4 - 2*2) = 26, so the distance is 104.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, d) = (1000, 4);
        let std_a = Normal::new(0.0, 1.0).unwrap();
        let std_b = Normal::new(5.0, 2.0).unwrap();
        let a = Array2::from_shape_fn((n, d), |_| std_a.sample(&mut rng));
        let b = Array2::from_shape_fn((n, d), |_| std_b.sample(&mut rng));
        let got = frechet_from_features(a.view(), b.view()).unwrap();
        let expected = 104.0;
        assert!(
            (got - expected).abs() <= 0.02 * expected,
            "got {got}, expected within 2% of {expected}"
        );
    }

    #[test]
    fn value_is_symmetric_and_order_invariant() {
        let fx = FeatureExtractor::new(16, 11);
        let plans = base_plans();
        let moved = jittered(&plans, 9, 5);
        let d_ab = frechet_diversity(&plans, &moved, &fx).unwrap();
        let d_ba = frechet_diversity(&moved, &plans, &fx).unwrap();
        assert!((d_ab - d_ba).abs() < 1e-9);

        let mut shuffled = moved.clone();
        shuffled.reverse();
        shuffled.swap(1, 3);
        let d_shuffled = frechet_diversity(&plans, &shuffled, &fx).unwrap();
        assert!((d_ab - d_shuffled).abs() < 1e-9);
    }

    #[test]
    fn distance_grows_with_jitter() {
        let fx = FeatureExtractor::default();
        let plans = base_plans();
        let mut values = Vec::new();
        for amount in [0i16, 4, 16] {
            let moved = jittered(&plans, amount, 99);
            values.push(frechet_diversity(&plans, &moved, &fx).unwrap());
        }
        assert!(values[0] < 1e-6, "zero jitter should be ~0, got {}", values[0]);
        assert!(
            values[0] < values[1] && values[1] < values[2],
            "expected strict growth, got {values:?}"
        );
    }

    #[test]
    fn sets_smaller_than_two_are_rejected() {
        let fx = FeatureExtractor::new(16, 3);
        let plans = base_plans();
        let err = frechet_diversity(&plans[..1], &plans, &fx).unwrap_err();
        assert!(matches!(err, MetricsError::SmallSet { count: 1, need: 2 }));
    }

    #[test]
    fn features_are_seed_deterministic() {
        let plans = base_plans();
        let fa = FeatureExtractor::new(16, 21).features(&plans).unwrap();
        let fb = FeatureExtractor::new(16, 21).features(&plans).unwrap();
        assert_eq!(fa, fb);
        let fc = FeatureExtractor::new(16, 22).features(&plans).unwrap();
        assert_ne!(fa, fc);
    }

    #[test]
    fn scores_are_finite_and_nonnegative_for_tiny_sets() {
        let fx = FeatureExtractor::new(16, 8);
        let plans = base_plans();
        let d = frechet_diversity(&plans[..2], &plans[2..5], &fx).unwrap();
        assert!(d.is_finite() && d >= 0.0, "got {d}");
    }
}
