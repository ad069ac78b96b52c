//! Plan and pair records in the JSON-lines interchange format.
//!
//! A corpus is either one `.jsonl` file or a directory of them (read in
//! sorted filename order). Every line holds one plan record; invalid lines
//! are skipped, logged, and reported rather than failing the whole load.
//!
//! Pair records extend a plan record with an `"init"` key (the coarse layout
//! condition) and an optional `"description"` key, leaving the plan's own
//! keys untouched, so a pair file is readable by any plan-record consumer
//! that ignores unknown keys.

use crate::{DataError, Result, Sample};
use floorgen_core::init::LayoutInit;
use floorgen_core::types::Floorplan;
use serde_json::Value;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Result of loading a plan corpus.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub plans: Vec<Floorplan>,
    /// One `file:line: reason` entry per skipped record.
    pub skipped: Vec<String>,
    /// Number of files read.
    pub files: usize,
}

/// Result of loading a pair corpus.
#[derive(Debug, Clone, Default)]
pub struct PairsReport {
    pub samples: Vec<Sample>,
    /// One `file:line: reason` entry per skipped record.
    pub skipped: Vec<String>,
    /// Number of files read.
    pub files: usize,
}

/// The `.jsonl` files under `path`: the file itself, or a directory's
/// `*.jsonl` entries in sorted order. A missing path is an I/O error.
fn jsonl_files(path: &Path) -> Result<Vec<PathBuf>> {
    let meta = std::fs::metadata(path)?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

/// Applies `parse` to every non-blank line of every file, collecting results
/// and `file:line: reason` skip entries.
fn read_records<T>(
    files: &[PathBuf],
    mut parse: impl FnMut(&str) -> Result<T>,
) -> Result<(Vec<T>, Vec<String>)> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for file in files {
        let reader = BufReader::new(File::open(file)?);
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match parse(&line) {
                Ok(record) => records.push(record),
                Err(e) => {
                    let note = format!("{}:{}: {e}", file.display(), idx + 1);
                    log::warn!("skipping record {note}");
                    skipped.push(note);
                }
            }
        }
    }
    Ok((records, skipped))
}

/// Loads every valid plan record under `path` (file or directory).
pub fn load_corpus(path: impl AsRef<Path>) -> Result<LoadReport> {
    let files = jsonl_files(path.as_ref())?;
    let (plans, skipped) =
        read_records(&files, |line| Ok(Floorplan::from_json_line(line)?))?;
    if plans.is_empty() {
        log::warn!("corpus {} contains no valid plans", path.as_ref().display());
    }
    Ok(LoadReport { plans, skipped, files: files.len() })
}

/// Serializes one training pair as a plan record with `"init"` and (when
/// present) `"description"` keys added. Key order is canonical, so equal
/// samples serialize to byte-equal lines.
pub fn sample_to_json_line(sample: &Sample) -> String {
    let mut record: Value = serde_json::from_str(&sample.target.to_json_line())
        .expect("plan record is valid JSON");
    let object = record.as_object_mut().expect("plan record is a JSON object");
    object.insert(
        "init".to_string(),
        serde_json::to_value(&sample.condition_init).expect("layout serialization cannot fail"),
    );
    if let Some(text) = &sample.description {
        object.insert("description".to_string(), Value::String(text.clone()));
    }
    record.to_string()
}

/// Parses one pair record; inverse of [`sample_to_json_line`]. The rebuilt
/// sample re-runs full pair validation.
pub fn sample_from_json_line(line: &str) -> Result<Sample> {
    let mut record: Value =
        serde_json::from_str(line).map_err(|e| DataError::Parse(e.to_string()))?;
    let object = record
        .as_object_mut()
        .ok_or_else(|| DataError::Parse("pair record must be a JSON object".to_string()))?;
    let init_value = object
        .remove("init")
        .ok_or_else(|| DataError::Parse("pair record is missing \"init\"".to_string()))?;
    let init: LayoutInit =
        serde_json::from_value(init_value).map_err(|e| DataError::Parse(e.to_string()))?;
    let description = match object.remove("description") {
        None => None,
        Some(Value::String(text)) => Some(text),
        Some(other) => {
            return Err(DataError::Parse(format!(
                "\"description\" must be a string, got {other}"
            )))
        }
    };
    let target = Floorplan::from_json_line(&record.to_string())?;
    Sample::new(target, init, description)
}

/// Writes samples as one pair record per line.
pub fn write_pairs(samples: &[Sample], path: impl AsRef<Path>) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path.as_ref())?);
    for sample in samples {
        writer.write_all(sample_to_json_line(sample).as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Loads every valid pair record under `path` (file or directory).
pub fn read_pairs(path: impl AsRef<Path>) -> Result<PairsReport> {
    let files = jsonl_files(path.as_ref())?;
    let (samples, skipped) = read_records(&files, sample_from_json_line)?;
    if samples.is_empty() {
        log::warn!("pair corpus {} contains no valid records", path.as_ref().display());
    }
    Ok(PairsReport { samples, skipped, files: files.len() })
}
