//! Conditioning ablations: trains one model per conditioning configuration
//! and per offset-rate setting, evaluates each on held-out pairs, and
//! renders machine-readable comparison tables.
//!
//! Two studies run from one input:
//!
//! * **conditioning** — forward-only, reverse-only, and both pathways
//!   enabled, all at the base offset rate;
//! * **rate sweep** — both pathways enabled at rates 1e-1, 1e-2, 1e-3, plus
//!   a rate-0 control row. A rate of exactly 0 zeroes the forward offset,
//!   so that row must reproduce the reverse-only row's numbers — a built-in
//!   cross-check that the two switches really are the same axis.
//!
//! Every row starts from the same network initialization and the same
//! training seed, so row differences come from the configuration alone.
//! A row that fails to train or evaluate carries its error message and the
//! remaining rows still run.

use floorgen_core::init::LayoutInit;
use floorgen_core::types::Floorplan;
use floorgen_metrics::{evaluate, EvalConfig, MetricReport};
use floorgen_model::{Denoiser, DenoiserConfig};

use crate::ops::DiffusionConfig;
use crate::sample::sample;
use crate::train::{train, TrainConfig, TrainItem};
use crate::{DiffusionError, Result};

/// One trained-and-evaluated configuration.
#[derive(Debug, Clone)]
pub struct AblationRow {
    /// Row key: `forward-only` / `reverse-only` / `both` in the
    /// conditioning study, the rate label in the rate sweep.
    pub label: String,
    pub forward_cond: bool,
    pub reverse_cond: bool,
    pub cond_rate: f64,
    pub diversity: Option<f64>,
    pub compatibility: Option<f64>,
    pub macro_iou: Option<f64>,
    pub micro_iou: Option<f64>,
    /// Populated when this row's training or evaluation failed.
    pub error: Option<String>,
}

/// Everything a study needs: data, architecture, and base configurations.
///
/// `train.checkpoint_path` and `train.loss_log_path` are ignored — rows
/// train in memory so they cannot clobber each other's files.
#[derive(Debug)]
pub struct AblationInput<'a> {
    pub train_items: &'a [TrainItem],
    /// Held-out (coarse layout, target) pairs; the target also provides the
    /// loop structure handed to the sampler.
    pub eval: &'a [(LayoutInit, Floorplan)],
    pub net_config: DenoiserConfig,
    pub train: TrainConfig,
    /// Base engine configuration; rows override the conditioning flags and
    /// offset rate.
    pub diffusion: DiffusionConfig,
    pub eval_config: EvalConfig,
}

/// Results of both studies.
#[derive(Debug, Clone)]
pub struct AblationReport {
    /// forward-only, reverse-only, both — in that order.
    pub conditioning: Vec<AblationRow>,
    /// Rates 1e-1, 1e-2, 1e-3, then the rate-0 control — in that order.
    pub rates: Vec<AblationRow>,
}

fn train_and_eval(input: &AblationInput, cfg: &DiffusionConfig) -> Result<MetricReport> {
    let net = Denoiser::init(input.net_config.clone(), input.train.seed)?;
    let mut tcfg = input.train.clone();
    tcfg.checkpoint_path = None;
    tcfg.loss_log_path = None;
    let state = train(net, input.train_items, cfg, &tcfg)?;

    let mut preds = Vec::with_capacity(input.eval.len());
    let mut targets = Vec::with_capacity(input.eval.len());
    for (idx, (init, target)) in input.eval.iter().enumerate() {
        let seed = tcfg.seed.wrapping_add(idx as u64 + 1);
        preds.push(sample(&state.net, target, init, cfg, seed)?);
        targets.push(target.clone());
    }
    let pairs: Vec<(usize, usize)> = (0..preds.len()).map(|i| (i, i)).collect();
    Ok(evaluate(&preds, &targets, &pairs, &input.eval_config))
}

fn run_row(
    input: &AblationInput,
    label: &str,
    forward_cond: bool,
    reverse_cond: bool,
    cond_rate: f64,
) -> AblationRow {
    let mut cfg = input.diffusion.clone();
    cfg.forward_cond = forward_cond;
    cfg.reverse_cond = reverse_cond;
    cfg.cond_rate = cond_rate;
    let mut row = AblationRow {
        label: label.to_string(),
        forward_cond,
        reverse_cond,
        cond_rate,
        diversity: None,
        compatibility: None,
        macro_iou: None,
        micro_iou: None,
        error: None,
    };
    match train_and_eval(input, &cfg) {
        Ok(report) => {
            row.diversity = report.diversity;
            row.compatibility = report.compatibility;
            row.macro_iou = report.macro_iou;
            row.micro_iou = report.micro_iou;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs both studies. Fails fast on invalid shared inputs; per-row failures
/// are recorded on the row instead.
pub fn ablation_harness(input: &AblationInput) -> Result<AblationReport> {
    input.diffusion.validate()?;
    input.train.validate()?;
    input.net_config.validate().map_err(DiffusionError::from)?;
    if input.train_items.is_empty() {
        return Err(DiffusionError::Empty("no training items".into()));
    }
    if input.eval.is_empty() {
        return Err(DiffusionError::Empty("no evaluation pairs".into()));
    }

    let base_rate = input.diffusion.cond_rate;
    let conditioning = vec![
        run_row(input, "forward-only", true, false, base_rate),
        run_row(input, "reverse-only", false, true, base_rate),
        run_row(input, "both", true, true, base_rate),
    ];
    let both_row = &conditioning[2];

    let mut rates = Vec::new();
    for (label, rate) in [("1e-1", 1e-1), ("1e-2", 1e-2), ("1e-3", 1e-3)] {
        if rate == base_rate {
            // Identical configuration to the "both" row: reuse its results
            // instead of retraining.
            let mut row = both_row.clone();
            row.label = label.to_string();
            rates.push(row);
        } else {
            rates.push(run_row(input, label, true, true, rate));
        }
    }
    rates.push(run_row(input, "0", true, true, 0.0));

    Ok(AblationReport {
        conditioning,
        rates,
    })
}

fn metric_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "NA".to_string(),
    }
}

fn yes_no(v: bool) -> &'static str {
    if v {
        "yes"
    } else {
        "no"
    }
}

fn push_error_comments(rows: &[AblationRow], out: &mut String) {
    for row in rows {
        if let Some(err) = &row.error {
            out.push_str(&format!("# {}: {err}\n", row.label));
        }
    }
}

/// Tab-separated conditioning study; one comment line per failed row.
pub fn render_conditioning_table(rows: &[AblationRow]) -> String {
    let mut out = String::from("Forward\tReverse\tDiversity\tCompatibility\tMacro IoU\tMicro IoU\n");
    for row in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            yes_no(row.forward_cond),
            yes_no(row.reverse_cond),
            metric_cell(row.diversity),
            metric_cell(row.compatibility),
            metric_cell(row.macro_iou),
            metric_cell(row.micro_iou),
        ));
    }
    push_error_comments(rows, &mut out);
    out
}

/// Tab-separated rate sweep; one comment line per failed row.
pub fn render_rate_table(rows: &[AblationRow]) -> String {
    let mut out = String::from("Rate\tDiversity\tCompatibility\tMacro IoU\tMicro IoU\n");
    for row in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            row.label,
            metric_cell(row.diversity),
            metric_cell(row.compatibility),
            metric_cell(row.macro_iou),
            metric_cell(row.micro_iou),
        ));
    }
    push_error_comments(rows, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{make_schedule, ScheduleKind};
    use crate::train::prepare_item;
    use floorgen_core::init::{Direction, InitRoom};
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

    fn iroom(name: &str, x: u8, y: u8, w: u8, h: u8) -> InitRoom {
        InitRoom {
            name: name.into(),
            style: "modern".into(),
            position: [x, y],
            size: [w, h],
            door: Direction::Up,
        }
    }

    fn pair(shift: u8) -> (LayoutInit, Floorplan) {
        let target = Floorplan::new(vec![
            rect(RoomType::LivingRoom, 16 + shift, 16, 120 + shift, 120),
            rect(RoomType::Bedroom, 120 + shift, 16, 200 + shift, 120),
        ])
        .unwrap();
        let init = LayoutInit::new(vec![
            iroom("living room", 20 + shift, 20, 96, 96),
            iroom("bedroom", 124 + shift, 20, 72, 96),
        ])
        .unwrap();
        (init, target)
    }

    fn study_input<'a>(
        items: &'a [TrainItem],
        eval: &'a [(LayoutInit, Floorplan)],
    ) -> AblationInput<'a> {
        AblationInput {
            train_items: items,
            eval,
            net_config: DenoiserConfig {
                d_model: 16,
                heads: 2,
                blocks: 1,
                discrete_blocks: 1,
                ff_mult: 2,
                timestep_encoding: Default::default(),
            },
            train: TrainConfig {
                steps: 25,
                batch_size: 2,
                lr: 1e-3,
                weight_decay: 1e-2,
                seed: 8,
                checkpoint_interval: 0,
                checkpoint_path: None,
                loss_log_path: None,
            },
            diffusion: {
                let mut cfg =
                    DiffusionConfig::new(make_schedule(8, ScheduleKind::Cosine).unwrap());
                cfg.t_discrete = 2;
                cfg
            },
            eval_config: EvalConfig::default(),
        }
    }

    fn fixture() -> (Vec<TrainItem>, Vec<(LayoutInit, Floorplan)>) {
        let pairs: Vec<(LayoutInit, Floorplan)> = vec![pair(0), pair(8)];
        let items: Vec<TrainItem> = pairs
            .iter()
            .map(|(init, target)| prepare_item(target, init, 2.0).unwrap())
            .collect();
        let eval = vec![pair(4), pair(12)];
        (items, eval)
    }

    #[test]
    fn harness_populates_all_rows_and_metrics() {
        let (items, eval) = fixture();
        let report = ablation_harness(&study_input(&items, &eval)).unwrap();

        assert_eq!(report.conditioning.len(), 3);
        let flags: Vec<(bool, bool)> = report
            .conditioning
            .iter()
            .map(|r| (r.forward_cond, r.reverse_cond))
            .collect();
        assert_eq!(flags, vec![(true, false), (false, true), (true, true)]);
        for row in &report.conditioning {
            assert!(row.error.is_none(), "{}: {:?}", row.label, row.error);
            assert!(row.diversity.is_some(), "{} diversity", row.label);
            assert!(row.compatibility.is_some(), "{} compatibility", row.label);
            assert!(row.macro_iou.is_some(), "{} macro", row.label);
            assert!(row.micro_iou.is_some(), "{} micro", row.label);
        }

        assert_eq!(report.rates.len(), 4);
        let labels: Vec<&str> = report.rates.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, vec!["1e-1", "1e-2", "1e-3", "0"]);

        // The base rate is 1e-1, so the first sweep row reuses the "both"
        // row's results verbatim.
        let both = &report.conditioning[2];
        let first = &report.rates[0];
        assert_eq!(first.diversity, both.diversity);
        assert_eq!(first.compatibility, both.compatibility);
        assert_eq!(first.macro_iou, both.macro_iou);
        assert_eq!(first.micro_iou, both.micro_iou);

        // A forward offset of exactly zero is the reverse-only
        // configuration by another name; the numbers must agree exactly.
        let reverse_only = &report.conditioning[1];
        let zero = &report.rates[3];
        assert!(zero.error.is_none(), "{:?}", zero.error);
        assert_eq!(zero.diversity, reverse_only.diversity);
        assert_eq!(zero.compatibility, reverse_only.compatibility);
        assert_eq!(zero.macro_iou, reverse_only.macro_iou);
        assert_eq!(zero.micro_iou, reverse_only.micro_iou);
    }

    #[test]
    fn empty_inputs_fail_fast() {
        let (items, eval) = fixture();
        let err = ablation_harness(&study_input(&[], &eval)).unwrap_err();
        assert!(matches!(err, DiffusionError::Empty(_)), "{err:?}");
        let err = ablation_harness(&study_input(&items, &[])).unwrap_err();
        assert!(matches!(err, DiffusionError::Empty(_)), "{err:?}");
    }

    #[test]
    fn tables_render_headers_values_and_errors() {
        let ok_row = AblationRow {
            label: "both".into(),
            forward_cond: true,
            reverse_cond: true,
            cond_rate: 0.1,
            diversity: Some(1.25),
            compatibility: Some(0.5),
            macro_iou: Some(0.75),
            micro_iou: Some(0.625),
            error: None,
        };
        let bad_row = AblationRow {
            label: "reverse-only".into(),
            forward_cond: false,
            reverse_cond: true,
            cond_rate: 0.1,
            diversity: None,
            compatibility: None,
            macro_iou: None,
            micro_iou: None,
            error: Some("training diverged".into()),
        };

        let table = render_conditioning_table(&[ok_row.clone(), bad_row.clone()]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(
            lines[0],
            "Forward\tReverse\tDiversity\tCompatibility\tMacro IoU\tMicro IoU"
        );
        assert_eq!(lines[1], "yes\tyes\t1.2500\t0.5000\t0.7500\t0.6250");
        assert_eq!(lines[2], "no\tyes\tNA\tNA\tNA\tNA");
        assert_eq!(lines[3], "# reverse-only: training diverged");

        let mut rate_row = ok_row;
        rate_row.label = "1e-2".into();
        let table = render_rate_table(&[rate_row, bad_row]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "Rate\tDiversity\tCompatibility\tMacro IoU\tMicro IoU");
        assert_eq!(lines[1], "1e-2\t1.2500\t0.5000\t0.7500\t0.6250");
        assert_eq!(lines[2], "reverse-only\tNA\tNA\tNA\tNA");
        assert_eq!(lines[3], "# reverse-only: training diverged");
    }
}
