use crate::error::{Error, Result};

/// Per-class correct counts and class sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ClassTally {
    pub correct: [u64; 2],
    pub total: [u64; 2],
}

impl ClassTally {
    pub fn new(predictions: &[u8], labels: &[u8]) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::Dimension {
                expected: labels.len(),
                actual: predictions.len(),
            });
        }
        let mut t = ClassTally {
            correct: [0; 2],
            total: [0; 2],
        };
        for (&p, &l) in predictions.iter().zip(labels) {
            if p > 1 || l > 1 {
                return Err(Error::Data("predictions and labels must be 0 or 1".into()));
            }
            t.total[l as usize] += 1;
            t.correct[l as usize] += u64::from(p == l);
        }
        if t.total.contains(&0) {
            return Err(Error::Data("balanced accuracy needs both classes in the labels".into()));
        }
        Ok(t)
    }

    pub fn balanced_accuracy(&self) -> f64 {
        0.5 * (self.correct[0] as f64 / self.total[0] as f64 + self.correct[1] as f64 / self.total[1] as f64)
    }

    /// Balanced accuracy scaled by `total[0] * total[1]`, exact in integers.
    pub fn scaled_key(&self, correct: [u64; 2]) -> u64 {
        correct[0] * self.total[1] + correct[1] * self.total[0]
    }
}

/// Mean of the per-class accuracies.
pub fn balanced_accuracy(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    Ok(ClassTally::new(predictions, labels)?.balanced_accuracy())
}
