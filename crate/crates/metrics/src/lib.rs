//! Evaluation metrics for generated floorplans.
//!
//! Four scores, each usable on its own and bundled by [`evaluate`]:
//!
//! * [`micro_iou`] — raster overlap over min-cost-matched room pairs;
//! * [`macro_iou`] — raster overlap per room type, averaged over types;
//! * [`compatibility`] — exact edit distance between room adjacency graphs;
//! * [`frechet_diversity`] — Fréchet distance between feature distributions
//!   of two plan sets ("frechet-rp64").
//!
//! [`evaluate`] runs all of them with per-metric isolation: a metric that
//! cannot be computed (oversized graph, too-small set, no pairs) is simply
//! omitted from the report with a note, never silently defaulted, and never
//! allowed to block the other metrics.

mod frechet;
mod ged;
mod iou;

pub use frechet::{
    frechet_diversity, frechet_from_features, FeatureExtractor, COVARIANCE_EPS,
    DEFAULT_FEATURE_RESOLUTION, DEFAULT_FEATURE_SEED, FEATURE_DIM, SHRINKAGE_SATURATION,
};
pub use ged::{
    compatibility, ged_brute_force, graph_edit_distance, LabeledGraph, MAX_EXACT_NODES,
};
pub use iou::{iou_components, macro_iou, micro_iou, IouComponents, IOU_RESOLUTION};

use floorgen_core::types::Floorplan;
use floorgen_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    /// Nothing to measure: empty plan, empty pair list where pairs are
    /// required, or zero rasterized room area.
    #[error("empty input: {0}")]
    Empty(String),
    /// Exact graph edit distance refused the instance; there is no
    /// approximate fallback.
    #[error("graphs too large for exact edit distance: {nodes} combined nodes (max {max})")]
    TooLarge { nodes: usize, max: usize },
    /// Distribution distance needs more samples.
    #[error("set too small for a distribution distance: {count} plans (need at least {need})")]
    SmallSet { count: usize, need: usize },
    /// Mismatched array dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Name of the diversity score reported by [`evaluate`].
pub const DIVERSITY_METRIC: &str = "frechet-rp64";

/// Knobs for [`evaluate`], echoed verbatim into the rendered report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Raster edge length for both IoU scores.
    pub iou_resolution: usize,
    /// Geometric slack for adjacency extraction, in grid units.
    pub adjacency_eps: f64,
    /// Raster edge length feeding the diversity feature extractor.
    pub feature_resolution: usize,
    /// Seed of the diversity projection.
    pub feature_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> EvalConfig {
        EvalConfig {
            iou_resolution: IOU_RESOLUTION,
            adjacency_eps: 2.0,
            feature_resolution: DEFAULT_FEATURE_RESOLUTION,
            feature_seed: DEFAULT_FEATURE_SEED,
        }
    }
}

/// Aggregated scores over a prediction/target corpus. A `None` metric was
/// not computable for the given inputs; the reason is in `notes`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub micro_iou: Option<f64>,
    pub macro_iou: Option<f64>,
    /// Mean graph edit distance over scored pairs.
    pub compatibility: Option<f64>,
    /// Fréchet distance between the full prediction and target sets.
    pub diversity: Option<f64>,
    /// Pairs requested / pairs that produced IoU / pairs that produced a
    /// graph distance.
    pub pair_count: usize,
    pub iou_pairs: usize,
    pub compatibility_pairs: usize,
    pub pred_count: usize,
    pub target_count: usize,
    /// One line per skipped pair or omitted metric.
    pub notes: Vec<String>,
    pub config: EvalConfig,
}

impl MetricReport {
    /// Plain-text form: one `key = value` line per entry, stable key order,
    /// configuration echoed at the end. Omitted metrics produce no line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        if let Some(v) = self.micro_iou {
            kv("micro_iou", format!("{v:.6}"));
        }
        if let Some(v) = self.macro_iou {
            kv("macro_iou", format!("{v:.6}"));
        }
        if let Some(v) = self.compatibility {
            kv("compatibility", format!("{v:.6}"));
        }
        if let Some(v) = self.diversity {
            kv("diversity", format!("{v:.6}"));
        }
        kv("diversity_metric", DIVERSITY_METRIC.to_string());
        kv("pairs", self.pair_count.to_string());
        kv("iou_pairs", self.iou_pairs.to_string());
        kv("compatibility_pairs", self.compatibility_pairs.to_string());
        kv("pred_plans", self.pred_count.to_string());
        kv("target_plans", self.target_count.to_string());
        kv("iou_resolution", self.config.iou_resolution.to_string());
        kv("adjacency_eps", format!("{}", self.config.adjacency_eps));
        kv(
            "feature_resolution",
            self.config.feature_resolution.to_string(),
        );
        kv("feature_seed", self.config.feature_seed.to_string());
        for note in &self.notes {
            kv("note", note.clone());
        }
        out
    }
}

/// Scores predictions against targets.
///
/// `pairs` lists (prediction index, target index) couples for the paired
/// metrics (both IoU scores and compatibility); the diversity score compares
/// the two full sets and ignores the pairing. With no pairs the paired
/// metrics are omitted while diversity is still computed, and vice versa.
pub fn evaluate(
    preds: &[Floorplan],
    targets: &[Floorplan],
    pairs: &[(usize, usize)],
    config: &EvalConfig,
) -> MetricReport {
    let mut notes = Vec::new();

    // Paired raster overlap, pooled micro and averaged macro.
    let mut intersection = 0u64;
    let mut union = 0u64;
    let mut macro_sum = 0.0;
    let mut iou_pairs = 0usize;
    // Paired graph distances.
    let mut ged_sum = 0.0;
    let mut compatibility_pairs = 0usize;

    for &(pi, ti) in pairs {
        let (Some(pred), Some(target)) = (preds.get(pi), targets.get(ti)) else {
            notes.push(format!("pair ({pi}, {ti}) is out of range; skipped"));
            continue;
        };
        match iou_components(pred, target, config.iou_resolution) {
            Ok(c) => {
                intersection += c.intersection;
                union += c.union;
                macro_sum += c.macro_mean;
                iou_pairs += 1;
            }
            Err(e) => notes.push(format!("iou skipped for pair ({pi}, {ti}): {e}")),
        }
        match compatibility(pred, target, config.adjacency_eps) {
            Ok(d) => {
                ged_sum += d;
                compatibility_pairs += 1;
            }
            Err(e) => notes.push(format!("compatibility skipped for pair ({pi}, {ti}): {e}")),
        }
    }

    let micro = (iou_pairs > 0 && union > 0).then(|| intersection as f64 / union as f64);
    let macro_mean = (iou_pairs > 0).then(|| macro_sum / iou_pairs as f64);
    let compat = (compatibility_pairs > 0).then(|| ged_sum / compatibility_pairs as f64);
    if pairs.is_empty() {
        notes.push("no pairs given; paired metrics omitted".into());
    }

    let diversity = {
        let fx = FeatureExtractor::new(config.feature_resolution, config.feature_seed);
        match frechet_diversity(preds, targets, &fx) {
            Ok(d) => Some(d),
            Err(e) => {
                notes.push(format!("diversity skipped: {e}"));
                None
            }
        }
    };

    MetricReport {
        micro_iou: micro,
        macro_iou: macro_mean,
        compatibility: compat,
        diversity,
        pair_count: pairs.len(),
        iou_pairs,
        compatibility_pairs,
        pred_count: preds.len(),
        target_count: targets.len(),
        notes,
        config: config.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use floorgen_core::types::{Corner, Loop, RoomType};

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

    fn simple_set() -> Vec<Floorplan> {
        (0..4u8)
            .map(|k| {
                Floorplan::new(vec![
                    rect(RoomType::LivingRoom, 10 + 8 * k, 10, 110 + 8 * k, 90),
                    rect(RoomType::Bedroom, 10 + 8 * k, 100, 110 + 8 * k, 180),
                ])
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn perfect_predictions_score_perfectly() {
        let plans = simple_set();
        let pairs: Vec<(usize, usize)> = (0..plans.len()).map(|i| (i, i)).collect();
        let cfg = EvalConfig {
            feature_resolution: 16,
            ..EvalConfig::default()
        };
        let report = evaluate(&plans, &plans, &pairs, &cfg);
        assert!((report.micro_iou.unwrap() - 1.0).abs() < 1e-12);
        assert!((report.macro_iou.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(report.compatibility.unwrap(), 0.0);
        assert!(report.diversity.unwrap() < 1e-6);
        assert_eq!(report.iou_pairs, 4);
        assert_eq!(report.compatibility_pairs, 4);
    }

    #[test]
    fn no_pairs_still_yields_diversity() {
        let plans = simple_set();
        let cfg = EvalConfig {
            feature_resolution: 16,
            ..EvalConfig::default()
        };
        let report = evaluate(&plans, &plans, &[], &cfg);
        assert_eq!(report.micro_iou, None);
        assert_eq!(report.macro_iou, None);
        assert_eq!(report.compatibility, None);
        assert!(report.diversity.is_some());
        assert!(report.notes.iter().any(|n| n.contains("no pairs")));
    }

    #[test]
    fn oversized_graphs_only_lose_the_graph_metric() {
        // Seven rooms per plan: 14 combined nodes exceeds the exact-search
        // cap, so compatibility is omitted while both IoU scores survive.
        let big = |shift: u8| {
            let rooms = (0..7u8)
                .map(|k| {
                    rect(
                        RoomType::Bedroom,
                        5 + 34 * k + shift,
                        10,
                        30 + 34 * k + shift,
                        60,
                    )
                })
                .collect();
            Floorplan::new(rooms).unwrap()
        };
        let preds = vec![big(0), big(2)];
        let targets = vec![big(1), big(3)];
        let cfg = EvalConfig {
            feature_resolution: 16,
            ..EvalConfig::default()
        };
        let report = evaluate(&preds, &targets, &[(0, 0), (1, 1)], &cfg);
        assert!(report.micro_iou.is_some());
        assert!(report.macro_iou.is_some());
        assert_eq!(report.compatibility, None);
        assert_eq!(report.compatibility_pairs, 0);
        assert!(report
            .notes
            .iter()
            .any(|n| n.contains("compatibility skipped")));
    }

    #[test]
    fn out_of_range_pairs_are_noted_and_skipped() {
        let plans = simple_set();
        let cfg = EvalConfig {
            feature_resolution: 16,
            ..EvalConfig::default()
        };
        let report = evaluate(&plans, &plans, &[(0, 0), (9, 0)], &cfg);
        assert_eq!(report.iou_pairs, 1);
        assert!(report.notes.iter().any(|n| n.contains("out of range")));
    }

    #[test]
    fn rendered_report_lists_values_and_config() {
        let plans = simple_set();
        let pairs = vec![(0usize, 0usize), (1, 1)];
        let cfg = EvalConfig {
            feature_resolution: 16,
            ..EvalConfig::default()
        };
        let text = evaluate(&plans, &plans, &pairs, &cfg).render();
        for key in [
            "micro_iou = ",
            "macro_iou = ",
            "compatibility = ",
            "diversity = ",
            "diversity_metric = frechet-rp64",
            "pairs = 2",
            "pred_plans = 4",
            "target_plans = 4",
            "iou_resolution = 256",
            "adjacency_eps = 2",
            "feature_resolution = 16",
            "feature_seed = ",
        ] {
            assert!(text.contains(key), "missing `{key}` in:\n{text}");
        }
    }

    #[test]
    fn omitted_metrics_render_no_line() {
        let plans = simple_set();
        let cfg = EvalConfig {
            feature_resolution: 16,
            ..EvalConfig::default()
        };
        let text = evaluate(&plans[..1], &plans[..1], &[], &cfg).render();
        assert!(!text.contains("micro_iou"));
        assert!(!text.contains("compatibility = "));
        assert!(text.contains("diversity skipped"));
    }
}
