use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::TrialSet;
use crate::error::{Error, Result};
use crate::seed::{self, stream};

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldScheme {
    /// Seeded shuffle within each class, dealt round-robin over the folds.
    #[default]
    Stratified,
    /// Contiguous blocks of the recording order; the seed is unused.
    Blocked,
}

/// Test-set membership for each fold, as trial ids sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub scheme: FoldScheme,
    pub test: Vec<Vec<u32>>,
}

impl FoldPlan {
    pub fn fold_of(&self, id: u32) -> Option<usize> {
        self.test.iter().position(|f| f.binary_search(&id).is_ok())
    }

    /// Fold index for every trial of `trials`, in trial order.
    pub fn assignment(&self, trials: &TrialSet) -> Result<Vec<usize>> {
        let mut lookup = std::collections::HashMap::new();
        for (f, ids) in self.test.iter().enumerate() {
            for &id in ids {
                lookup.insert(id, f);
            }
        }
        if lookup.len() != trials.n_trials() {
            return Err(Error::Data(format!(
                "fold plan covers {} trials, data has {}",
                lookup.len(),
                trials.n_trials()
            )));
        }
        trials
            .trial_ids()
            .iter()
            .map(|id| {
                lookup
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Data(format!("trial {id} is in no fold")))
            })
            .collect()
    }
}

pub fn make_folds(trials: &TrialSet, k: usize, seed: u64) -> Result<FoldPlan> {
    make_folds_with(trials, k, seed, FoldScheme::Stratified)
}

pub fn make_folds_with(trials: &TrialSet, k: usize, seed: u64, scheme: FoldScheme) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let mut test = vec![Vec::new(); k];
    match scheme {
        FoldScheme::Stratified => {
            let counts = trials.class_counts();
            if counts.iter().any(|&c| c < k) {
                return Err(Error::Data(format!(
                    "stratified {k}-fold split needs at least {k} trials per class, have {counts:?}"
                )));
            }
            let mut rng = seed::rng(seed, stream::FOLDS, 0);
            let mut next = 0;
            for class in 0..2u8 {
                let mut ids: Vec<u32> = trials
                    .trial_ids()
                    .iter()
                    .zip(trials.labels())
                    .filter(|(_, &l)| l == class)
                    .map(|(&id, _)| id)
                    .collect();
                ids.shuffle(&mut rng);
                for id in ids {
                    test[next % k].push(id);
                    next += 1;
                }
            }
        }
        FoldScheme::Blocked => {
            let n = trials.n_trials();
            if n < k {
                return Err(Error::Data(format!("{k}-fold split needs at least {k} trials, have {n}")));
            }
            for (i, &id) in trials.trial_ids().iter().enumerate() {
                test[i * k / n].push(id);
            }
        }
    }
    for f in &mut test {
        f.sort_unstable();
    }
    Ok(FoldPlan { k, seed, scheme, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Interval;

    fn set(labels: Vec<u8>) -> TrialSet {
        let n = labels.len();
        TrialSet::new(100.0, vec!["a".into()], Interval::new(0.0, 20.0).unwrap(), vec![0.0; 2 * n], labels).unwrap()
    }

    fn counts(ts: &TrialSet, plan: &FoldPlan) -> Vec<[usize; 2]> {
        plan.test
            .iter()
            .map(|f| {
                let mut c = [0; 2];
                for &id in f {
                    c[ts.labels()[id as usize] as usize] += 1;
                }
                c
            })
            .collect()
    }

    #[test]
    fn hundred_balanced() {
        let ts = set((0..100).map(|i| (i % 2) as u8).collect());
        let plan = make_folds(&ts, 10, 3).unwrap();
        assert!(counts(&ts, &plan).iter().all(|c| *c == [5, 5]));
    }

    #[test]
    fn partition_and_determinism() {
        let ts = set((0..73).map(|i| u8::from(i % 5 < 2)).collect());
        let plan = make_folds(&ts, 10, 9).unwrap();
        let mut all: Vec<u32> = plan.test.concat();
        all.sort_unstable();
        assert_eq!(all, (0..73).collect::<Vec<_>>());
        assert_eq!(plan, make_folds(&ts, 10, 9).unwrap());
        assert_ne!(plan, make_folds(&ts, 10, 10).unwrap());
        let [n0, n1] = ts.class_counts();
        for c in counts(&ts, &plan) {
            assert!((c[0] as f64 - n0 as f64 / 10.0).abs() <= 1.0);
            assert!((c[1] as f64 - n1 as f64 / 10.0).abs() <= 1.0);
        }
        let a = plan.assignment(&ts).unwrap();
        assert_eq!(plan.fold_of(5), Some(a[5]));
    }

    #[test]
    fn too_few_trials() {
        let ts = set(vec![0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1]);
        assert!(make_folds(&ts, 10, 0).is_err());
        assert!(make_folds(&ts, 1, 0).is_err());
        assert!(make_folds_with(&ts, 10, 0, FoldScheme::Blocked).is_ok());
    }

    #[test]
    fn blocked_is_contiguous() {
        let ts = set((0..20).map(|i| (i % 2) as u8).collect());
        let plan = make_folds_with(&ts, 4, 0, FoldScheme::Blocked).unwrap();
        assert_eq!(plan.test[1], vec![5, 6, 7, 8, 9]);
    }
}
