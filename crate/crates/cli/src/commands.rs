//! Subcommand implementations.
//!
//! Every function takes the resolved [`CliConfig`] plus its own arguments and
//! returns a small output struct, so integration tests can call them directly
//! without spawning the binary. File-writing commands share one idempotence
//! rule via [`write_once`]: an existing output is left untouched (and logged)
//! unless `force` is set.

use crate::config::CliConfig;
use crate::render::{render_png, render_svg, RenderStyle};
use crate::{CliError, Result};
use floorgen_core::init::{init_to_floorplan, LayoutInit};
use floorgen_core::types::Floorplan;
use floorgen_data::{build_pairs, read_pairs, sample_to_json_line, synth_generate, PairMode};
use floorgen_diffusion::{
    ablation_harness, moments_path, prepare_item, render_conditioning_table, render_rate_table,
    sample, train, AblationInput, AblationReport, TrainItem,
};
use floorgen_llm::{
    builtin_demos, describe_layout, generate_layout_init, template_description, LiveClient,
    LlmClient, MockClient,
};
use floorgen_model::{load_checkpoint, Denoiser};
use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

/// Where `sample` gets its coarse layout from.
#[derive(Debug, Clone)]
pub enum InitSource {
    /// A layout JSON file; the language model is skipped entirely.
    File(PathBuf),
    /// A text description handed to the language model first.
    Text(String),
}

/// Output of [`cmd_init`].
#[derive(Debug)]
pub struct InitOutput {
    pub init: LayoutInit,
    pub json_path: PathBuf,
    pub svg_path: PathBuf,
}

/// Output of [`cmd_train`].
#[derive(Debug)]
pub struct TrainOutput {
    pub steps: usize,
    pub final_loss: Option<f64>,
    pub checkpoint: PathBuf,
}

/// Output of [`cmd_eval`].
#[derive(Debug)]
pub struct EvalOutput {
    pub report_path: PathBuf,
    pub scored_pairs: usize,
    pub excluded: usize,
}

/// Output of [`cmd_ablate`].
#[derive(Debug)]
pub struct AblateOutput {
    pub conditioning_path: PathBuf,
    pub rates_path: PathBuf,
    pub report: AblationReport,
}

/// Output of [`cmd_render`].
#[derive(Debug)]
pub struct RenderOutput {
    pub svg_path: PathBuf,
    pub png_path: Option<PathBuf>,
}

/// Selects the language model client: a live HTTP client when the endpoint
/// environment variable is set, otherwise the replay client on the config's
/// fixtures directory (the fixtures environment variable, when set, wins
/// over the config so recorded sessions can be swapped without editing it).
fn make_client(config: &CliConfig) -> Box<dyn LlmClient> {
    if let Some(live) = LiveClient::from_env() {
        return Box::new(live);
    }
    match std::env::var("FLOORGEN_LLM_FIXTURES") {
        Ok(dir) => Box::new(MockClient::new(dir)),
        Err(_) => Box::new(MockClient::new(&config.paths.fixtures)),
    }
}

/// Writes `bytes` to `path` unless it already exists and `force` is off.
/// Returns whether the file was (re)written. Parent directories are created.
fn write_once(path: &Path, bytes: &[u8], force: bool) -> Result<bool> {
    if path.exists() && !force {
        log::info!("{} exists; keeping it (pass --force to overwrite)", path.display());
        return Ok(false);
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, bytes)?;
    log::info!("wrote {}", path.display());
    Ok(true)
}

/// Reads a file, turning "not found" into the missing-artifact failure.
fn read_artifact(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == ErrorKind::NotFound {
            CliError::MissingArtifact(path.display().to_string())
        } else {
            CliError::Io(e)
        }
    })
}

/// Loads the first floorplan record of a JSON-lines file.
fn load_plan(path: &Path) -> Result<Floorplan> {
    let text = read_artifact(path)?;
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| CliError::Usage(format!("{} holds no records", path.display())))?;
    Ok(Floorplan::from_json_line(line)?)
}

/// Loads and validates a coarse-layout JSON file.
fn load_init(path: &Path) -> Result<LayoutInit> {
    let text = read_artifact(path)?;
    let init: LayoutInit = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{} is not a layout file: {e}", path.display())))?;
    init.validate()?;
    Ok(init)
}

fn layout_from_text(config: &CliConfig, text: &str) -> Result<LayoutInit> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(CliError::Usage("the description text is empty".into()));
    }
    let client = make_client(config);
    let demos = builtin_demos();
    let (init, repairs) =
        generate_layout_init(trimmed, &demos, client.as_ref(), config.llm.max_retries)?;
    for note in &repairs {
        log::info!("generation repair: {note}");
    }
    Ok(init)
}

/// `init`: text description → coarse layout JSON plus an SVG preview.
pub fn cmd_init(
    config: &CliConfig,
    text: &str,
    out_dir: Option<&Path>,
    force: bool,
) -> Result<InitOutput> {
    let init = layout_from_text(config, text)?;
    let dir = out_dir.unwrap_or(&config.paths.out_dir);
    let json_path = dir.join("layout_init.json");
    let svg_path = dir.join("layout_init.svg");

    let mut json = init.to_json_pretty();
    if !json.ends_with('\n') {
        json.push('\n');
    }
    write_once(&json_path, json.as_bytes(), force)?;

    let preview = init_to_floorplan(&init)?;
    let style = RenderStyle::from_section(&config.render)?;
    write_once(&svg_path, render_svg(&preview, &style).as_bytes(), force)?;

    Ok(InitOutput { init, json_path, svg_path })
}

/// `describe`: floorplan file → natural-language description (stdout or file).
pub fn cmd_describe(
    config: &CliConfig,
    input: &Path,
    template: bool,
    out: Option<&Path>,
    force: bool,
) -> Result<String> {
    let plan = load_plan(input)?;
    let text = if template {
        template_description(&plan)
    } else {
        let client = make_client(config);
        describe_layout(&plan, client.as_ref())?
    };
    match out {
        Some(path) => {
            let mut body = text.clone();
            if !body.ends_with('\n') {
                body.push('\n');
            }
            write_once(path, body.as_bytes(), force)?;
        }
        None => println!("{text}"),
    }
    Ok(text)
}

fn training_items(config: &CliConfig, pairs_path: &Path) -> Result<Vec<TrainItem>> {
    if !pairs_path.exists() {
        return Err(CliError::MissingArtifact(pairs_path.display().to_string()));
    }
    let report = read_pairs(pairs_path)?;
    for skip in &report.skipped {
        log::warn!("skipped record: {skip}");
    }
    if report.samples.is_empty() {
        return Err(CliError::Usage(format!(
            "{} holds no usable pairs",
            pairs_path.display()
        )));
    }
    report
        .samples
        .iter()
        .map(|s| Ok(prepare_item(&s.target, &s.condition_init, config.eval.adjacency_eps)?))
        .collect()
}

/// `train`: paired corpus → denoiser checkpoint. Resumes in place when the
/// checkpoint already exists; `--force` restarts from scratch.
pub fn cmd_train(config: &CliConfig, pairs_path: &Path, force: bool) -> Result<TrainOutput> {
    let items = training_items(config, pairs_path)?;
    let dcfg = config.diffusion.build()?;

    let mut tcfg = config.train.clone();
    if tcfg.checkpoint_path.is_none() {
        tcfg.checkpoint_path = Some(config.paths.checkpoint.clone());
    }
    if tcfg.loss_log_path.is_none() {
        tcfg.loss_log_path = Some(config.paths.out_dir.join("loss.tsv"));
    }
    let checkpoint = tcfg.checkpoint_path.clone().expect("set above");
    if let Some(parent) = checkpoint.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    if let Some(log_path) = &tcfg.loss_log_path {
        if let Some(parent) = log_path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
    }
    if force {
        for stale in [
            checkpoint.clone(),
            moments_path(&checkpoint),
            tcfg.loss_log_path.clone().expect("set above"),
        ] {
            match fs::remove_file(&stale) {
                Ok(()) => log::info!("removed {}", stale.display()),
                Err(e) if e.kind() == ErrorKind::NotFound => {}
                Err(e) => return Err(CliError::Io(e)),
            }
        }
    }

    let net = Denoiser::init(config.denoiser.clone(), tcfg.seed)?;
    let state = train(net, &items, &dcfg, &tcfg)?;
    let final_loss = state.history.last().map(|r| r.combined);
    log::info!(
        "training stopped at step {} (final combined loss {:?})",
        state.step,
        final_loss
    );
    Ok(TrainOutput { steps: state.step, final_loss, checkpoint })
}

/// `sample`: checkpoint + coarse layout → `count` refined floorplans, one
/// JSON and one SVG per sample, each drawn with its own seed.
pub fn cmd_sample(
    config: &CliConfig,
    source: InitSource,
    count: usize,
    out_dir: Option<&Path>,
    seed: u64,
    force: bool,
) -> Result<Vec<PathBuf>> {
    if count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let checkpoint = &config.paths.checkpoint;
    if !checkpoint.exists() {
        return Err(CliError::MissingArtifact(checkpoint.display().to_string()));
    }
    let (net, _meta) = load_checkpoint(checkpoint)?;

    let init = match source {
        InitSource::File(path) => load_init(&path)?,
        InitSource::Text(text) => layout_from_text(config, &text)?,
    };
    let structure = init_to_floorplan(&init)?;
    let dcfg = config.diffusion.build()?;
    let style = RenderStyle::from_section(&config.render)?;
    let dir = out_dir.unwrap_or(&config.paths.out_dir);

    let mut written = Vec::new();
    for i in 0..count {
        let plan = sample(&net, &structure, &init, &dcfg, seed.wrapping_add(i as u64))?;
        plan.validate()?;
        let json_path = dir.join(format!("sample_{i:02}.json"));
        let svg_path = dir.join(format!("sample_{i:02}.svg"));
        let mut line = plan.to_json_line();
        line.push('\n');
        write_once(&json_path, line.as_bytes(), force)?;
        write_once(&svg_path, render_svg(&plan, &style).as_bytes(), force)?;
        written.push(json_path);
        written.push(svg_path);
    }
    Ok(written)
}

/// The floorplan files directly under `dir`, keyed by filename.
fn plan_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    if !dir.is_dir() {
        return Err(CliError::MissingArtifact(dir.display().to_string()));
    }
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let is_plan = path.is_file()
            && matches!(
                path.extension().and_then(|e| e.to_str()),
                Some("json") | Some("jsonl")
            );
        if is_plan {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                files.insert(name.to_string(), path.clone());
            }
        }
    }
    Ok(files)
}

/// `eval`: scores predictions against targets, paired by filename. Files
/// present on only one side are excluded with a warning; the exclusion count
/// lands in the report.
pub fn cmd_eval(
    config: &CliConfig,
    pred_dir: &Path,
    target_dir: &Path,
    out: Option<&Path>,
    force: bool,
) -> Result<EvalOutput> {
    let pred_files = plan_files(pred_dir)?;
    let target_files = plan_files(target_dir)?;

    let mut preds = Vec::new();
    let mut targets = Vec::new();
    let mut pairs = Vec::new();
    let mut excluded_names = Vec::new();

    for (name, pred_path) in &pred_files {
        match target_files.get(name) {
            Some(target_path) => {
                let pred = load_plan(pred_path)?;
                let target = load_plan(target_path)?;
                pairs.push((preds.len(), targets.len()));
                preds.push(pred);
                targets.push(target);
            }
            None => {
                log::warn!("prediction {name} has no target; excluded");
                excluded_names.push(format!("prediction {name}"));
            }
        }
    }
    for name in target_files.keys() {
        if !pred_files.contains_key(name) {
            log::warn!("target {name} has no prediction; excluded");
            excluded_names.push(format!("target {name}"));
        }
    }

    let report = floorgen_metrics::evaluate(&preds, &targets, &pairs, &config.eval.build());
    let mut text = report.render();
    text.push_str(&format!("excluded = {}\n", excluded_names.len()));
    for name in &excluded_names {
        text.push_str(&format!("note = unpaired {name}\n"));
    }

    let report_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.paths.out_dir.join("report.txt"));
    write_once(&report_path, text.as_bytes(), force)?;
    print!("{text}");
    Ok(EvalOutput {
        report_path,
        scored_pairs: pairs.len(),
        excluded: excluded_names.len(),
    })
}

/// `ablate`: trains one model per conditioning / rate row on a synthetic
/// corpus and writes both result tables. The exit is nonzero only when every
/// row failed; partial failures are recorded in the tables.
pub fn cmd_ablate(
    config: &CliConfig,
    train_count: usize,
    eval_count: usize,
    rooms: usize,
    out_dir: Option<&Path>,
    seed: u64,
    force: bool,
) -> Result<AblateOutput> {
    if train_count == 0 || eval_count == 0 {
        return Err(CliError::Usage(
            "--train-count and --eval-count must be at least 1".into(),
        ));
    }
    let plans = synth_generate(train_count + eval_count, rooms, seed)?;
    let paired = build_pairs(&plans, PairMode::Perturb { jitter: 4 }, seed)?;
    let (train_samples, eval_samples) = paired.samples.split_at(train_count);

    let train_items = train_samples
        .iter()
        .map(|s| Ok(prepare_item(&s.target, &s.condition_init, config.eval.adjacency_eps)?))
        .collect::<Result<Vec<_>>>()?;
    let eval_pairs: Vec<(LayoutInit, Floorplan)> = eval_samples
        .iter()
        .map(|s| (s.condition_init.clone(), s.target.clone()))
        .collect();

    let mut tcfg = config.train.clone();
    tcfg.seed = seed;
    let input = AblationInput {
        train_items: &train_items,
        eval: &eval_pairs,
        net_config: config.denoiser.clone(),
        train: tcfg,
        diffusion: config.diffusion.build()?,
        eval_config: config.eval.build(),
    };
    let report = ablation_harness(&input)?;

    let dir = out_dir.unwrap_or(&config.paths.out_dir);
    let conditioning_path = dir.join("conditioning.tsv");
    let rates_path = dir.join("rates.tsv");
    write_once(
        &conditioning_path,
        render_conditioning_table(&report.conditioning).as_bytes(),
        force,
    )?;
    write_once(&rates_path, render_rate_table(&report.rates).as_bytes(), force)?;

    let rows = report.conditioning.iter().chain(&report.rates);
    let mut first_error = None;
    let mut all_failed = true;
    for row in rows {
        match &row.error {
            Some(err) => {
                log::warn!("row {} failed: {err}", row.label);
                if first_error.is_none() {
                    first_error = Some(format!("{}: {err}", row.label));
                }
            }
            None => all_failed = false,
        }
    }
    if all_failed {
        return Err(CliError::AblationFailed(
            first_error.unwrap_or_else(|| "no rows ran".into()),
        ));
    }
    Ok(AblateOutput { conditioning_path, rates_path, report })
}

/// `synth`: procedural corpus, either bare plans or (with `--jitter`)
/// plan/coarse-layout pairs.
pub fn cmd_synth(
    config: &CliConfig,
    count: usize,
    rooms: usize,
    jitter: Option<u8>,
    out: Option<&Path>,
    seed: u64,
    force: bool,
) -> Result<PathBuf> {
    let plans = synth_generate(count, rooms, seed)?;
    let body = match jitter {
        Some(j) => {
            let paired = build_pairs(&plans, PairMode::Perturb { jitter: j }, seed)?;
            paired
                .samples
                .iter()
                .map(sample_to_json_line)
                .collect::<Vec<_>>()
                .join("\n")
        }
        None => plans
            .iter()
            .map(Floorplan::to_json_line)
            .collect::<Vec<_>>()
            .join("\n"),
    };
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.paths.out_dir.join("synth.jsonl"));
    write_once(&path, format!("{body}\n").as_bytes(), force)?;
    Ok(path)
}

/// `render`: floorplan file → SVG, optionally plus a PNG raster.
pub fn cmd_render(
    config: &CliConfig,
    input: &Path,
    out: Option<&Path>,
    png: bool,
    force: bool,
) -> Result<RenderOutput> {
    let plan = load_plan(input)?;
    let style = RenderStyle::from_section(&config.render)?;
    let svg_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| input.with_extension("svg"));
    write_once(&svg_path, render_svg(&plan, &style).as_bytes(), force)?;

    let png_path = if png {
        let path = svg_path.with_extension("png");
        let image = render_png(&plan, &style)?;
        let mut bytes = Vec::new();
        image.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)?;
        write_once(&path, &bytes, force)?;
        Some(path)
    } else {
        None
    };
    Ok(RenderOutput { svg_path, png_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn write_once_keeps_existing_files_unless_forced() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("nested/a.txt");
        assert!(write_once(&path, b"first", false).unwrap());
        assert!(!write_once(&path, b"second", false).unwrap());
        assert_eq!(fs::read(&path).unwrap(), b"first");
        assert!(write_once(&path, b"third", true).unwrap());
        assert_eq!(fs::read(&path).unwrap(), b"third");
    }

    #[test]
    fn plan_files_lists_json_by_filename() {
        let dir = tempdir().unwrap();
        fs::write(dir.path().join("b.json"), "{}").unwrap();
        fs::write(dir.path().join("a.jsonl"), "{}").unwrap();
        fs::write(dir.path().join("notes.txt"), "x").unwrap();
        fs::create_dir(dir.path().join("sub.json")).unwrap();
        let files = plan_files(dir.path()).unwrap();
        let names: Vec<&str> = files.keys().map(String::as_str).collect();
        assert_eq!(names, ["a.jsonl", "b.json"]);

        let missing = plan_files(&dir.path().join("nope"));
        assert!(matches!(missing, Err(CliError::MissingArtifact(_))));
    }

    #[test]
    fn missing_artifacts_are_distinguished_from_other_io() {
        let dir = tempdir().unwrap();
        let err = read_artifact(&dir.path().join("gone.json")).unwrap_err();
        assert_eq!(err.exit_code(), 5);
    }

    #[test]
    fn empty_description_is_a_usage_error() {
        let config = CliConfig::load(None).unwrap();
        let err = layout_from_text(&config, "   ").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
