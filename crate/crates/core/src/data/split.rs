//! Stratified train/validation/test splitting.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::{DatasetItem, Label, Split};
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Split proportions and the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.70,
            val_frac: 0.15,
            test_frac: 0.15,
            seed: 0,
        }
    }
}

const FRAC_TOL: f64 = 1e-9;

impl SplitSpec {
    pub fn new(train_frac: f64, val_frac: f64, test_frac: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_frac,
            val_frac,
            test_frac,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Fractions must be finite, non-negative and sum to one.
    pub fn validate(&self) -> Result<()> {
        let fracs = self.fractions();
        if fracs.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "split fractions must be non-negative, got {fracs:?}"
            )));
        }
        let sum: f64 = fracs.iter().sum();
        if (sum - 1.0).abs() > FRAC_TOL {
            return Err(Error::InvalidConfig(format!(
                "split fractions sum to {sum}, not 1"
            )));
        }
        Ok(())
    }

    pub fn fractions(&self) -> [f64; 3] {
        [self.train_frac, self.val_frac, self.test_frac]
    }
}

/// Largest-remainder apportionment of `n` items over `fracs`. Equal
/// remainders favour the earlier subset (train, then val, then test).
pub fn apportion(n: usize, fracs: [f64; 3]) -> [usize; 3] {
    let quotas = fracs.map(|f| n as f64 * f);
    let mut sizes = quotas.map(|q| (q + FRAC_TOL).floor() as usize);
    let mut remainders: [f64; 3] = std::array::from_fn(|i| quotas[i] - sizes[i] as f64);
    let assigned: usize = sizes.iter().sum();
    for _ in 0..n.saturating_sub(assigned) {
        let mut best = 0;
        for i in 1..3 {
            if remainders[i] > remainders[best] + FRAC_TOL {
                best = i;
            }
        }
        sizes[best] += 1;
        remainders[best] = f64::NEG_INFINITY;
    }
    sizes
}

/// Assigns a split to every position of `keys`, stratified by key.
///
/// Each stratum is shuffled with its own seeded stream and cut at the
/// apportioned sizes.
pub fn assign_splits<K: Ord + Clone>(keys: &[K], spec: &SplitSpec) -> Result<Vec<Split>> {
    if keys.is_empty() {
        return Err(Error::EmptyDataset("nothing to split".into()));
    }
    spec.validate()?;
    let mut strata: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        strata.entry(k.clone()).or_default().push(i);
    }
    let mut out = vec![Split::Train; keys.len()];
    for (ordinal, members) in strata.values_mut().enumerate() {
        let mut rng = rng_from(&[spec.seed, ordinal as u64]);
        members.shuffle(&mut rng);
        let [n_train, n_val, _] = apportion(members.len(), spec.fractions());
        for (pos, &idx) in members.iter().enumerate() {
            out[idx] = if pos < n_train {
                Split::Train
            } else if pos < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }
    Ok(out)
}

pub type SplitOutput = (Vec<DatasetItem>, Vec<DatasetItem>, Vec<DatasetItem>);

/// Stratified split by `(label, class_tag)`. Each subset keeps the input
/// order of its members.
pub fn split_dataset(items: &[DatasetItem], spec: &SplitSpec) -> Result<SplitOutput> {
    let keys: Vec<(Label, String)> = items
        .iter()
        .map(|i| (i.label, i.class_tag.clone()))
        .collect();
    let assignment = assign_splits(&keys, spec)?;
    let mut out: SplitOutput = Default::default();
    for (item, split) in items.iter().zip(assignment) {
        match split {
            Split::Train => out.0.push(item.clone()),
            Split::Val => out.1.push(item.clone()),
            Split::Test => out.2.push(item.clone()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::ItemSource;
    use std::collections::HashSet;

    fn items(n_per_label: usize, tags: &[&str]) -> Vec<DatasetItem> {
        let mut v = Vec::new();
        for label in [Label::Real, Label::Fake] {
            for i in 0..n_per_label {
                v.push(DatasetItem {
                    source: ItemSource::Synthetic {
                        seed: (label as u64) << 32 | i as u64,
                    },
                    label,
                    class_tag: tags[i % tags.len()].to_string(),
                });
            }
        }
        v
    }

    #[test]
    fn ten_items_single_stratum() {
        // quotas 7.0 / 1.5 / 1.5: floors 7/1/1, the tied half goes to val.
        assert_eq!(apportion(10, [0.7, 0.15, 0.15]), [7, 2, 1]);
        let keys = vec![0u8; 10];
        let a = assign_splits(&keys, &SplitSpec::default()).unwrap();
        let count = |s| a.iter().filter(|&&x| x == s).count();
        assert_eq!((count(Split::Train), count(Split::Val), count(Split::Test)), (7, 2, 1));
    }

    #[test]
    fn apportion_sums() {
        for n in 0..200 {
            let s = apportion(n, [0.7, 0.15, 0.15]);
            assert_eq!(s.iter().sum::<usize>(), n);
        }
        assert_eq!(apportion(3, [1.0 / 3.0; 3]), [1, 1, 1]);
        assert_eq!(apportion(5, [0.0, 0.5, 0.5]), [0, 3, 2]);
    }

    #[test]
    fn table_sizes_at_ten_thousand() {
        let all = items(5000, &["face", "cat"]);
        let (tr, va, te) = split_dataset(&all, &SplitSpec::default()).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (7000, 1500, 1500));
        for (subset, want) in [(&tr, 3500), (&va, 750), (&te, 750)] {
            let fakes = subset.iter().filter(|i| i.label == Label::Fake).count();
            assert_eq!(fakes, want);
            assert_eq!(subset.len() - fakes, want);
        }
    }

    #[test]
    fn partition_and_determinism() {
        let all = items(37, &["a", "b", "c"]);
        let spec = SplitSpec::new(0.6, 0.2, 0.2, 9).unwrap();
        let first = split_dataset(&all, &spec).unwrap();
        assert_eq!(first, split_dataset(&all, &spec).unwrap());
        let mut seen = HashSet::new();
        for it in first.0.iter().chain(&first.1).chain(&first.2) {
            assert!(seen.insert(it.source.clone()));
        }
        assert_eq!(seen.len(), all.len());
        let other = split_dataset(&all, &SplitSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(first, other);
    }

    #[test]
    fn invalid_specs() {
        assert!(SplitSpec::new(0.7, 0.2, 0.2, 0).is_err());
        assert!(SplitSpec::new(-0.1, 0.6, 0.5, 0).is_err());
        assert!(matches!(
            split_dataset(&[], &SplitSpec::default()),
            Err(Error::EmptyDataset(_))
        ));
    }
}
