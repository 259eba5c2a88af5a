//! Seeded corpus sampling and train/test splitting.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::{CorpusError, LevelGrid};
use crate::seeding::{stream_rng, STREAM_SAMPLE, STREAM_SPLIT};

/// A seeded sample drawn evenly across generators.
#[derive(Debug, Clone)]
pub struct CorpusSample {
    pub levels: Vec<LevelGrid>,
    pub seed: u64,
    pub per_generator_counts: BTreeMap<String, usize>,
}

/// Draws `n` levels, distributed evenly between generators: counts differ by
/// at most one, with the remainder going to generators in ascending label
/// order. Selection within each pool is uniform without replacement; the
/// same seed always yields the same sample.
pub fn sample_even(
    corpus: &BTreeMap<String, Vec<LevelGrid>>,
    n: usize,
    seed: u64,
) -> Result<CorpusSample, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let generators = corpus.len();
    let base = n / generators;
    let remainder = n % generators;

    let mut rng = stream_rng(seed, STREAM_SAMPLE);
    let mut levels = Vec::with_capacity(n);
    let mut per_generator_counts = BTreeMap::new();
    for (gen_index, (generator, pool)) in corpus.iter().enumerate() {
        let quota = base + usize::from(gen_index < remainder);
        if pool.len() < quota {
            return Err(CorpusError::InsufficientLevels {
                generator: generator.clone(),
                available: pool.len(),
                needed: quota,
            });
        }
        let mut chosen = rand::seq::index::sample(&mut rng, pool.len(), quota).into_vec();
        chosen.sort_unstable();
        levels.extend(chosen.into_iter().map(|i| pool[i].clone()));
        per_generator_counts.insert(generator.clone(), quota);
    }
    Ok(CorpusSample {
        levels,
        seed,
        per_generator_counts,
    })
}

/// Shuffles the sample under `seed` and splits it into disjoint train/test
/// lists, with the train size rounded half-up from `n * train_fraction`.
pub fn split_train_test(
    sample: &CorpusSample,
    train_fraction: f64,
    seed: u64,
) -> (Vec<LevelGrid>, Vec<LevelGrid>) {
    assert!(
        train_fraction > 0.0 && train_fraction < 1.0,
        "train_fraction must be in (0, 1)"
    );
    let n = sample.levels.len();
    let train_size = ((n as f64 * train_fraction) + 0.5).floor() as usize;
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut stream_rng(seed, STREAM_SPLIT));
    let train = indices[..train_size]
        .iter()
        .map(|&i| sample.levels[i].clone())
        .collect();
    let test = indices[train_size..]
        .iter()
        .map(|&i| sample.levels[i].clone())
        .collect();
    (train, test)
}
