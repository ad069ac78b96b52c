//! Train/test splits grouped by room count.
//!
//! Cross-validation runs partition samples into groups keyed by the number
//! of rooms in the target plan (doors excluded), then shuffle and cut each
//! group independently. Shuffling is deterministic: each group derives its
//! own RNG from the spec seed and the group key, so adding or removing one
//! group never reshuffles another.

use crate::{DataError, Result, Sample};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Odd 64-bit mix for per-group seed derivation.
const SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// Largest supported room count; plan loops cap out well above this.
const MAX_ROOM_COUNT: usize = 32;

/// Which groups to form and how to cut them.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    /// Room counts to group by; samples with other counts are dropped.
    pub room_counts: BTreeSet<usize>,
    pub train_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    /// The standard evaluation grouping: 5–8 rooms, 80/20.
    fn default() -> SplitSpec {
        SplitSpec {
            room_counts: BTreeSet::from([5, 6, 7, 8]),
            train_frac: 0.8,
            test_frac: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.room_counts.is_empty() {
            return Err(DataError::Config("room_counts must not be empty".to_string()));
        }
        if let Some(&bad) =
            self.room_counts.iter().find(|&&c| c == 0 || c > MAX_ROOM_COUNT)
        {
            return Err(DataError::Config(format!(
                "room count {bad} outside 1..={MAX_ROOM_COUNT}"
            )));
        }
        let sum = self.train_frac + self.test_frac;
        if !(self.train_frac >= 0.0 && self.test_frac >= 0.0 && (sum - 1.0).abs() <= 1e-9) {
            return Err(DataError::Config(format!(
                "train/test fractions must be nonnegative and sum to 1, got {} + {}",
                self.train_frac, self.test_frac
            )));
        }
        Ok(())
    }
}

/// One group's partition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitGroup {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// All requested groups (possibly empty ones) plus drop/empty notes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitReport {
    pub groups: BTreeMap<usize, SplitGroup>,
    pub notes: Vec<String>,
}

/// Partitions `samples` per `spec` (see module docs).
pub fn split(samples: Vec<Sample>, spec: &SplitSpec) -> Result<SplitReport> {
    spec.validate()?;
    let mut buckets: BTreeMap<usize, Vec<Sample>> = BTreeMap::new();
    let mut dropped: BTreeMap<usize, usize> = BTreeMap::new();
    for sample in samples {
        let count = sample.target.room_loops().count();
        if spec.room_counts.contains(&count) {
            buckets.entry(count).or_default().push(sample);
        } else {
            *dropped.entry(count).or_default() += 1;
        }
    }

    let mut report = SplitReport::default();
    for (count, n) in dropped {
        let note = format!("dropped {n} sample(s) with {count} rooms outside the spec");
        log::warn!("{note}");
        report.notes.push(note);
    }
    for &count in &spec.room_counts {
        let mut group = buckets.remove(&count).unwrap_or_default();
        if group.is_empty() {
            let note = format!("no samples with {count} rooms; group left empty");
            log::warn!("{note}");
            report.notes.push(note);
            report.groups.insert(count, SplitGroup::default());
            continue;
        }
        let mut rng =
            ChaCha8Rng::seed_from_u64(spec.seed ^ (count as u64).wrapping_mul(SEED_MIX));
        group.shuffle(&mut rng);
        // Small epsilon so binary rounding of the fraction cannot drop a
        // sample from an exactly-divisible group (e.g. 0.7 * 10).
        let train_len = ((spec.train_frac * group.len() as f64) + 1e-9).floor() as usize;
        let test = group.split_off(train_len.min(group.len()));
        report.groups.insert(count, SplitGroup { train: group, test });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sample_to_json_line;
    use crate::pairs::{build_pairs, PairMode};
    use crate::synth::synth_generate;

    fn samples(n: usize, rooms: usize, seed: u64) -> Vec<Sample> {
        let plans = synth_generate(n, rooms, seed).unwrap();
        build_pairs(&plans, PairMode::Perturb { jitter: 4 }, seed).unwrap().samples
    }

    fn spec(counts: &[usize]) -> SplitSpec {
        SplitSpec { room_counts: counts.iter().copied().collect(), ..SplitSpec::default() }
    }

    #[test]
    fn eighty_twenty_cut_of_one_hundred() {
        let all = samples(100, 6, 1);
        let report = split(all.clone(), &spec(&[6])).unwrap();
        let group = &report.groups[&6];
        assert_eq!(group.train.len(), 80);
        assert_eq!(group.test.len(), 20);
        assert!(report.notes.is_empty());

        // Nothing lost, nothing duplicated: the two sides together are a
        // permutation of the input.
        let mut split_lines: Vec<String> = group
            .train
            .iter()
            .chain(&group.test)
            .map(sample_to_json_line)
            .collect();
        let mut input_lines: Vec<String> = all.iter().map(sample_to_json_line).collect();
        split_lines.sort();
        input_lines.sort();
        assert_eq!(split_lines, input_lines);
    }

    #[test]
    fn mixed_counts_form_disjoint_groups() {
        let mut all = Vec::new();
        for rooms in 5..=8 {
            all.extend(samples(6, rooms, rooms as u64));
        }
        let report = split(all, &spec(&[5, 6, 7, 8])).unwrap();
        assert_eq!(report.groups.len(), 4);
        for (&count, group) in &report.groups {
            assert_eq!(group.train.len() + group.test.len(), 6);
            for sample in group.train.iter().chain(&group.test) {
                assert_eq!(sample.target.room_loops().count(), count);
            }
        }
    }

    #[test]
    fn same_seed_gives_the_same_partition() {
        let all = samples(20, 5, 2);
        let a = split(all.clone(), &spec(&[5])).unwrap();
        let b = split(all.clone(), &spec(&[5])).unwrap();
        assert_eq!(a, b);

        let different = SplitSpec { seed: 99, ..spec(&[5]) };
        let c = split(all, &different).unwrap();
        assert_ne!(a.groups[&5].train, c.groups[&5].train, "seed changes the shuffle");
    }

    #[test]
    fn empty_and_out_of_spec_groups_are_noted() {
        let all = samples(4, 6, 3);
        let report = split(all, &spec(&[5, 6])).unwrap();
        assert_eq!(report.groups[&5], SplitGroup::default(), "no 5-room samples");
        assert_eq!(report.groups[&6].train.len() + report.groups[&6].test.len(), 4);
        assert!(report.notes.iter().any(|n| n.contains("no samples with 5 rooms")));

        let report = split(samples(2, 7, 3), &spec(&[5])).unwrap();
        assert!(report.notes.iter().any(|n| n.contains("dropped 2")), "{:?}", report.notes);
        assert!(report.groups[&5].train.is_empty());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad_sum = SplitSpec { train_frac: 0.5, test_frac: 0.6, ..spec(&[5]) };
        assert!(matches!(split(Vec::new(), &bad_sum), Err(DataError::Config(_))));

        let no_counts = SplitSpec { room_counts: BTreeSet::new(), ..SplitSpec::default() };
        assert!(matches!(split(Vec::new(), &no_counts), Err(DataError::Config(_))));

        let huge = spec(&[33]);
        assert!(matches!(split(Vec::new(), &huge), Err(DataError::Config(_))));
    }
}
