//! Seeded train/dev/test splitting.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::types::Sentence;
use crate::rng::substream;
use crate::{Error, Result};

/// Split fractions; the defaults mirror the reference corpus division
/// (train : validation : evaluation of the sentences actually used).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub dev_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.7066,
            dev_fraction: 0.0977,
            test_fraction: 0.1957,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train_fraction", self.train_fraction),
            ("dev_fraction", self.dev_fraction),
            ("test_fraction", self.test_fraction),
        ] {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {f}")));
            }
        }
        let sum = self.train_fraction + self.dev_fraction + self.test_fraction;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Partition sentences into disjoint, exhaustive train/dev/test sets.
/// Membership is decided by a seeded shuffle; within each split the
/// original corpus order is kept.
pub fn split_corpus(
    sentences: Vec<Sentence>,
    spec: &SplitSpec,
) -> Result<(Vec<Sentence>, Vec<Sentence>, Vec<Sentence>)> {
    spec.validate()?;
    let n = sentences.len();
    if n == 0 {
        return Err(Error::InvalidInput("cannot split an empty corpus".into()));
    }
    let n_train = (spec.train_fraction * n as f64).round() as usize;
    let n_dev = (spec.dev_fraction * n as f64).round() as usize;
    if n_train + n_dev >= n || n_train == 0 || n_dev == 0 {
        return Err(Error::Config(format!(
            "corpus of {n} sentences leaves an empty split under {spec:?}"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(spec.seed, "split"));
    // assignment: 0 train, 1 dev, 2 test
    let mut assign = vec![2u8; n];
    for &i in order.iter().take(n_train) {
        assign[i] = 0;
    }
    for &i in order.iter().skip(n_train).take(n_dev) {
        assign[i] = 1;
    }

    let mut train = Vec::with_capacity(n_train);
    let mut dev = Vec::with_capacity(n_dev);
    let mut test = Vec::with_capacity(n - n_train - n_dev);
    for (s, a) in sentences.into_iter().zip(assign) {
        match a {
            0 => train.push(s),
            1 => dev.push(s),
            _ => test.push(s),
        }
    }
    Ok((train, dev, test))
}
