use crate::error::{Error, Result};
use crate::grid::BinaryGrid;

/// `1` where `forecast > tau` (strict).
pub fn apply_threshold(forecast: &[f64], tau: f64) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::input(format!("threshold {tau} outside [0, 1]")));
    }
    Ok(forecast.iter().map(|&f| f > tau).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionCounts {
    pub fn from_masks(pred: &[bool], gt: &[bool]) -> Result<Self> {
        if pred.len() != gt.len() {
            return Err(Error::input(format!("prediction has {} cells but ground truth has {}", pred.len(), gt.len())));
        }
        let mut c = ConfusionCounts::default();
        for (&p, &g) in pred.iter().zip(gt) {
            match (p, g) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    /// `2TP / (2TP + FP + FN)`, i.e. the harmonic mean of precision and recall.
    pub fn f1(&self) -> Option<f64> {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

/// Dice coefficient `2|A ∩ B| / (|A| + |B|)`; undefined for two empty masks.
pub fn dice(a: &BinaryGrid, b: &BinaryGrid) -> Result<Option<f64>> {
    if !a.same_shape(b) {
        return Err(Error::input("dice needs masks of equal shape"));
    }
    let both = a.cells.iter().zip(&b.cells).filter(|(&x, &y)| x && y).count();
    Ok(ratio(2 * both as u64, (a.count_ones() + b.count_ones()) as u64))
}
