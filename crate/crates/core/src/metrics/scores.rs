//! Score tables: a forecast/outcome sample reduced to `(distinct score,
//! positives, negatives)` triples.
//!
//! Every probabilistic metric here depends on the sample only through this
//! table, so pooling realizations that share one forecast frame (or
//! bootstrap-reweighting them) never touches individual cells twice.

use crate::error::{Error, Result};
use crate::metrics::binary::ConfusionCounts;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreLevel {
    pub score: f64,
    pub positives: u64,
    pub negatives: u64,
}

impl ScoreLevel {
    fn total(&self) -> u64 {
        self.positives + self.negatives
    }
}

/// Levels sorted by ascending score, each with a non-zero count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    levels: Vec<ScoreLevel>,
}

pub(crate) fn check_forecast(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(Error::input(format!("forecast value {v} outside [0, 1]"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrierDecomposition {
    /// `E[(E[O|F] - F)^2]`
    pub reliability: f64,
    /// `E[Var(O|F)]`
    pub conditional_variance: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    /// Mean forecast in the bin; `None` when empty.
    pub mean_pred: Option<f64>,
    /// Observed positive frequency in the bin; `None` when empty.
    pub mean_obs: Option<f64>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCurve {
    pub bins: Vec<CalibrationBin>,
    pub total: u64,
}

impl CalibrationCurve {
    /// Support-weighted L1 gap between the curve and the diagonal.
    pub fn ece(&self) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        let n = self.total as f64;
        Some(
            self.bins
                .iter()
                .filter_map(|b| Some((b.count as f64 / n) * (b.mean_obs? - b.mean_pred?).abs()))
                .sum(),
        )
    }

    /// Largest `|mean_obs - mean_pred|` over bins holding at least `min_count` cells.
    pub fn max_gap(&self, min_count: u64) -> Option<f64> {
        self.bins
            .iter()
            .filter(|b| b.count >= min_count && b.count > 0)
            .filter_map(|b| Some((b.mean_obs? - b.mean_pred?).abs()))
            .reduce(f64::max)
    }
}

/// Bin index of `p` among `m` equal-width bins over `[0, 1]`; bins are
/// left-closed and the last one also holds 1.0.
pub fn bin_index(p: f64, m: usize) -> usize {
    ((p * m as f64) as usize).min(m - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

impl ScoreTable {
    pub fn from_cells(forecast: &[f64], outcome: &[bool]) -> Result<Self> {
        if forecast.len() != outcome.len() {
            return Err(Error::input(format!(
                "forecast has {} cells but outcome has {}",
                forecast.len(),
                outcome.len()
            )));
        }
        check_forecast(forecast)?;
        let mut pairs: Vec<(f64, bool)> = forecast.iter().copied().zip(outcome.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut levels: Vec<ScoreLevel> = Vec::new();
        for (score, y) in pairs {
            match levels.last_mut() {
                Some(l) if l.score == score => {}
                _ => levels.push(ScoreLevel { score, positives: 0, negatives: 0 }),
            }
            let l = levels.last_mut().expect("pushed");
            if y {
                l.positives += 1;
            } else {
                l.negatives += 1;
            }
        }
        Ok(ScoreTable { levels })
    }

    /// Builds a table from parallel per-score counts; `scores` must be
    /// strictly ascending. Zero-count levels are dropped.
    pub fn from_counts(scores: &[f64], positives: &[u64], negatives: &[u64]) -> Self {
        debug_assert!(scores.windows(2).all(|w| w[0] < w[1]));
        let levels = scores
            .iter()
            .zip(positives.iter().zip(negatives))
            .filter(|(_, (&p, &n))| p + n > 0)
            .map(|(&score, (&positives, &negatives))| ScoreLevel { score, positives, negatives })
            .collect();
        ScoreTable { levels }
    }

    pub fn levels(&self) -> &[ScoreLevel] {
        &self.levels
    }

    pub fn total(&self) -> u64 {
        self.levels.iter().map(ScoreLevel::total).sum()
    }

    pub fn positives(&self) -> u64 {
        self.levels.iter().map(|l| l.positives).sum()
    }

    pub fn negatives(&self) -> u64 {
        self.levels.iter().map(|l| l.negatives).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn merge(&self, other: &ScoreTable) -> ScoreTable {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.levels, &other.levels);
        let mut levels = Vec::with_capacity(a.len() + b.len());
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.score == y.score => {
                    i += 1;
                    j += 1;
                    ScoreLevel { score: x.score, positives: x.positives + y.positives, negatives: x.negatives + y.negatives }
                }
                (Some(x), Some(y)) if x.score < y.score => {
                    i += 1;
                    *x
                }
                (Some(_), Some(y)) | (None, Some(y)) => {
                    j += 1;
                    *y
                }
                (Some(x), None) => {
                    i += 1;
                    *x
                }
                (None, None) => unreachable!(),
            };
            levels.push(next);
        }
        ScoreTable { levels }
    }

    pub fn mse(&self) -> Option<f64> {
        let n = self.total();
        if n == 0 {
            return None;
        }
        let sum: f64 = self
            .levels
            .iter()
            .map(|l| l.positives as f64 * (1.0 - l.score).powi(2) + l.negatives as f64 * l.score.powi(2))
            .sum();
        Some(sum / n as f64)
    }

    /// Groups cells by exact forecast value.
    pub fn brier_decomposition(&self) -> Option<BrierDecomposition> {
        let n = self.total() as f64;
        if n == 0.0 {
            return None;
        }
        let (mut reliability, mut conditional_variance) = (0.0, 0.0);
        for l in &self.levels {
            let size = l.total() as f64;
            let weight = size / n;
            let freq = l.positives as f64 / size;
            reliability += weight * (freq - l.score).powi(2);
            conditional_variance += weight * freq * (1.0 - freq);
        }
        Some(BrierDecomposition { reliability, conditional_variance, mse: self.mse()? })
    }

    pub fn calibration_curve(&self, m: usize) -> Result<CalibrationCurve> {
        if m == 0 {
            return Err(Error::input("calibration needs at least one bin"));
        }
        let mut count = vec![0u64; m];
        let mut pos = vec![0u64; m];
        let mut pred_sum = vec![0.0f64; m];
        for l in &self.levels {
            let k = bin_index(l.score, m);
            count[k] += l.total();
            pos[k] += l.positives;
            pred_sum[k] += l.score * l.total() as f64;
        }
        let width = 1.0 / m as f64;
        let bins = (0..m)
            .map(|k| CalibrationBin {
                lo: k as f64 * width,
                hi: if k + 1 == m { 1.0 } else { (k + 1) as f64 * width },
                mean_pred: (count[k] > 0).then(|| pred_sum[k] / count[k] as f64),
                mean_obs: (count[k] > 0).then(|| pos[k] as f64 / count[k] as f64),
                count: count[k],
            })
            .collect();
        Ok(CalibrationCurve { bins, total: self.total() })
    }

    pub fn ece(&self, m: usize) -> Option<f64> {
        self.calibration_curve(m).ok()?.ece()
    }

    /// Counts for the strict threshold rule `score > tau`.
    pub fn confusion(&self, tau: f64) -> ConfusionCounts {
        let mut c = ConfusionCounts::default();
        for l in &self.levels {
            if l.score > tau {
                c.tp += l.positives;
                c.fp += l.negatives;
            } else {
                c.fn_ += l.positives;
                c.tn += l.negatives;
            }
        }
        c
    }

    /// One point per distinct score, from the highest threshold down.
    pub fn pr_curve(&self) -> Vec<PrPoint> {
        let total_pos = self.positives();
        if total_pos == 0 {
            return Vec::new();
        }
        let (mut tp, mut fp) = (0u64, 0u64);
        self.levels
            .iter()
            .rev()
            .map(|l| {
                tp += l.positives;
                fp += l.negatives;
                PrPoint { threshold: l.score, precision: tp as f64 / (tp + fp) as f64, recall: tp as f64 / total_pos as f64 }
            })
            .collect()
    }

    /// Average precision: `sum (R_n - R_{n-1}) * P_n` over descending
    /// thresholds, ties sharing one threshold.
    pub fn average_precision(&self) -> Option<f64> {
        let total_pos = self.positives();
        if total_pos == 0 {
            return None;
        }
        let (mut tp, mut fp) = (0u64, 0u64);
        let mut ap = 0.0;
        for l in self.levels.iter().rev() {
            tp += l.positives;
            fp += l.negatives;
            if l.positives > 0 {
                ap += (l.positives as f64 / total_pos as f64) * (tp as f64 / (tp + fp) as f64);
            }
        }
        Some(ap)
    }

    /// ROC points from `(0, 0)` through every distinct threshold.
    pub fn roc_curve(&self) -> Vec<RocPoint> {
        let (p, n) = (self.positives(), self.negatives());
        if p == 0 || n == 0 {
            return Vec::new();
        }
        let (mut tp, mut fp) = (0u64, 0u64);
        let mut out = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
        for l in self.levels.iter().rev() {
            tp += l.positives;
            fp += l.negatives;
            out.push(RocPoint { threshold: l.score, fpr: fp as f64 / n as f64, tpr: tp as f64 / p as f64 });
        }
        out
    }

    /// Area under the ROC curve as the tie-corrected Mann-Whitney statistic,
    /// computed in integer arithmetic (equal to trapezoidal integration of
    /// [`ScoreTable::roc_curve`]).
    pub fn auc_roc(&self) -> Option<f64> {
        let (p, n) = (self.positives(), self.negatives());
        if p == 0 || n == 0 {
            return None;
        }
        // Positives beating negatives: each positive at level k beats every
        // negative at a lower level and ties with negatives at level k.
        let mut neg_below: u128 = 0;
        let mut twice: u128 = 0;
        for l in &self.levels {
            twice += u128::from(l.positives) * (2 * neg_below + u128::from(l.negatives));
            neg_below += u128::from(l.negatives);
        }
        Some(twice as f64 / (2.0 * p as f64 * n as f64))
    }
}

