//! Forecast verification metrics.
//!
//! Classification metrics (precision, recall, accuracy, F1, AUC-PR,
//! AUC-ROC) score agreement with one realized outcome; MSE and ECE score the
//! forecast as a probability. Metrics that would divide by zero return
//! `None` and are excluded from aggregates, with the remaining support
//! recorded.

pub mod binary;
pub mod bootstrap;
pub mod scores;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use binary::{apply_threshold, dice, ConfusionCounts};
pub use bootstrap::{bootstrap_ci, mean_ci, percentile_interval, resample_indices, BootstrapConfig};
pub use scores::{bin_index, BrierDecomposition, CalibrationBin, CalibrationCurve, PrPoint, RocPoint, ScoreLevel, ScoreTable};

use crate::error::{Error, Result};
use crate::grid::StateGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Precision,
    Recall,
    Accuracy,
    F1,
    AucPr,
    AucRoc,
    Mse,
    Ece,
}

impl Metric {
    pub const ALL: [Metric; 8] =
        [Metric::Precision, Metric::Recall, Metric::Accuracy, Metric::F1, Metric::AucPr, Metric::AucRoc, Metric::Mse, Metric::Ece];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
            Metric::AucPr => "auc_pr",
            Metric::AucRoc => "auc_roc",
            Metric::Mse => "mse",
            Metric::Ece => "ece",
        }
    }

    pub fn evaluate(self, table: &ScoreTable, params: &MetricParams) -> Option<f64> {
        match self {
            Metric::Precision => table.confusion(params.threshold).precision(),
            Metric::Recall => table.confusion(params.threshold).recall(),
            Metric::Accuracy => table.confusion(params.threshold).accuracy(),
            Metric::F1 => table.confusion(params.threshold).f1(),
            Metric::AucPr => table.average_precision(),
            Metric::AucRoc => table.auc_roc(),
            Metric::Mse => table.mse(),
            Metric::Ece => table.ece(params.ece_bins),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let valid: Vec<&str> = Metric::ALL.iter().map(|m| m.name()).collect();
            Error::input(format!("unknown metric '{s}'; valid names: {}", valid.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricParams {
    /// Decision threshold for the thresholded metrics (strict `>`).
    pub threshold: f64,
    pub ece_bins: usize,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams { threshold: 0.5, ece_bins: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stratum {
    Overall,
    Timestep(usize),
    Variance { lo: f64, hi: f64 },
    Dice { lo: f64, hi: f64 },
}

impl Stratum {
    pub fn kind(&self) -> &'static str {
        match self {
            Stratum::Overall => "overall",
            Stratum::Timestep(_) => "timestep",
            Stratum::Variance { .. } => "variance",
            Stratum::Dice { .. } => "dc",
        }
    }

    pub fn bounds(&self) -> (Option<f64>, Option<f64>) {
        match *self {
            Stratum::Overall => (None, None),
            Stratum::Timestep(t) => (Some(t as f64), Some(t as f64)),
            Stratum::Variance { lo, hi } | Stratum::Dice { lo, hi } => (Some(lo), Some(hi)),
        }
    }
}

/// One metric value within one stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub metric: Metric,
    pub value: Option<f64>,
    pub support: usize,
    pub ci: Option<(f64, f64)>,
    pub stratum: Stratum,
}

impl MetricReport {
    /// The interval is widened to contain `value` when needed, and dropped
    /// when `value` is undefined.
    pub fn new(metric: Metric, stratum: Stratum, value: Option<f64>, support: usize, ci: Option<(f64, f64)>) -> Self {
        let ci = match (value, ci) {
            (Some(v), Some((lo, hi))) => Some((lo.min(v), hi.max(v))),
            _ => None,
        };
        MetricReport { metric, value, support, ci, stratum }
    }
}

/// The distinct values of one forecast frame, with each cell mapped to its
/// value's index. Outcomes of any number of realizations can then be
/// reduced to per-value counts in one pass each.
#[derive(Debug, Clone)]
pub struct FrameLevels {
    scores: Vec<f64>,
    level_of: Vec<u32>,
}

/// Positive/negative cell counts per forecast level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelCounts {
    pub positives: Vec<u64>,
    pub negatives: Vec<u64>,
}

impl LevelCounts {
    pub fn zeros(n: usize) -> Self {
        LevelCounts { positives: vec![0; n], negatives: vec![0; n] }
    }

    pub fn add(&mut self, other: &LevelCounts) {
        for (a, b) in self.positives.iter_mut().zip(&other.positives) {
            *a += b;
        }
        for (a, b) in self.negatives.iter_mut().zip(&other.negatives) {
            *a += b;
        }
    }
}

impl FrameLevels {
    pub fn new(forecast: &[f64]) -> Result<Self> {
        scores::check_forecast(forecast)?;
        let mut scores: Vec<f64> = forecast.to_vec();
        scores.sort_by(f64::total_cmp);
        scores.dedup();
        let level_of = forecast
            .iter()
            .map(|f| scores.binary_search_by(|s| s.total_cmp(f)).expect("value present") as u32)
            .collect();
        Ok(FrameLevels { scores, level_of })
    }

    pub fn n_levels(&self) -> usize {
        self.scores.len()
    }

    pub fn n_cells(&self) -> usize {
        self.level_of.len()
    }

    pub fn count(&self, outcome: impl IntoIterator<Item = bool>) -> LevelCounts {
        let mut c = LevelCounts::zeros(self.scores.len());
        let mut n = 0;
        for (&k, y) in self.level_of.iter().zip(outcome) {
            if y {
                c.positives[k as usize] += 1;
            } else {
                c.negatives[k as usize] += 1;
            }
            n += 1;
        }
        debug_assert_eq!(n, self.level_of.len());
        c
    }

    /// Counts the burnt mask of a state grid against this frame.
    pub fn count_burnt(&self, grid: &StateGrid) -> Result<LevelCounts> {
        if grid.cells.len() != self.level_of.len() {
            return Err(Error::input(format!(
                "outcome grid has {} cells, forecast has {}",
                grid.cells.len(),
                self.level_of.len()
            )));
        }
        Ok(self.count(grid.cells.iter().map(|s| s.is_burnt())))
    }

    pub fn table(&self, counts: &LevelCounts) -> ScoreTable {
        ScoreTable::from_counts(&self.scores, &counts.positives, &counts.negatives)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(f: &[f64], o: &[u8]) -> ScoreTable {
        ScoreTable::from_cells(f, &o.iter().map(|&x| x == 1).collect::<Vec<_>>()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn average_precision_hand_values() {
        let t = table(&[0.9, 0.8, 0.4, 0.3], &[1, 0, 1, 0]);
        assert!(close(t.average_precision().unwrap(), 5.0 / 6.0));
        assert_eq!(table(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).average_precision(), Some(1.0));
        // Constant score: one operating point at the base rate.
        assert!(close(table(&[0.3; 8], &[1, 0, 0, 1, 0, 0, 0, 0]).average_precision().unwrap(), 0.25));
        assert_eq!(table(&[0.3, 0.2], &[0, 0]).average_precision(), None);
    }

    #[test]
    fn auc_roc_hand_values() {
        assert_eq!(table(&[0.9, 0.8, 0.4, 0.3], &[1, 0, 1, 0]).auc_roc(), Some(0.75));
        assert_eq!(table(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).auc_roc(), Some(1.0));
        assert_eq!(table(&[0.5; 6], &[1, 0, 1, 0, 0, 0]).auc_roc(), Some(0.5));
        assert_eq!(table(&[0.5, 0.2], &[1, 1]).auc_roc(), None);
    }

    #[test]
    fn roc_trapezoid_matches_rank_statistic() {
        let t = table(&[0.9, 0.8, 0.8, 0.4, 0.3, 0.3, 0.1], &[1, 0, 1, 1, 0, 1, 0]);
        let area: f64 = t.roc_curve().windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum();
        assert!(close(area, t.auc_roc().unwrap()));
        let pr = t.pr_curve();
        assert_eq!(pr.len(), 5);
        assert_eq!(pr.last().unwrap().recall, 1.0);
    }

    #[test]
    fn mse_hand_values() {
        assert!(close(table(&[0.8, 0.2], &[1, 0]).mse().unwrap(), 0.04));
        assert_eq!(table(&[0.5; 3], &[1, 0, 1]).mse(), Some(0.25));
        assert_eq!(table(&[1.0, 0.0], &[1, 0]).mse(), Some(0.0));
        assert_eq!(table(&[1.0, 1.0], &[0, 0]).mse(), Some(1.0));
    }

    #[test]
    fn brier_decomposition_hand_values() {
        let d = table(&[0.5; 4], &[1, 1, 0, 0]).brier_decomposition().unwrap();
        assert_eq!((d.reliability, d.conditional_variance, d.mse), (0.0, 0.25, 0.25));
        let d = table(&[0.9, 0.9], &[1, 0]).brier_decomposition().unwrap();
        assert!(close(d.reliability, 0.16));
        assert!(close(d.conditional_variance, 0.25));
        assert!(close(d.mse, 0.41));
        let d = table(&[1.0, 0.0, 1.0], &[1, 0, 1]).brier_decomposition().unwrap();
        assert_eq!((d.reliability, d.conditional_variance), (0.0, 0.0));
    }

    #[test]
    fn ece_hand_values() {
        assert_eq!(table(&[1.0; 5], &[1; 5]).ece(10), Some(0.0));
        assert!(close(table(&[0.7; 10], &[1, 1, 1, 1, 1, 1, 1, 0, 0, 0]).ece(10).unwrap(), 0.0));
        assert!(close(table(&[0.9, 0.9, 0.1, 0.1], &[1, 0, 0, 0]).ece(10).unwrap(), 0.25));
    }

    #[test]
    fn calibration_curve_bins() {
        let t = table(&[0.05, 0.1, 0.15, 0.999, 1.0], &[0, 0, 1, 1, 1]);
        let c = t.calibration_curve(10).unwrap();
        assert_eq!(c.bins.iter().map(|b| b.count).sum::<u64>(), 5);
        assert_eq!(c.bins[0].count, 1);
        assert_eq!(c.bins[1].count, 2);
        assert_eq!(c.bins[9].count, 2);
        assert_eq!(c.bins[9].hi, 1.0);
        assert_eq!(c.bins[5].mean_pred, None);
        assert!(close(c.ece().unwrap(), t.ece(10).unwrap()));
        let constant = table(&[0.35; 4], &[1, 0, 0, 0]).calibration_curve(10).unwrap();
        assert_eq!(constant.bins.iter().filter(|b| b.count > 0).count(), 1);
        assert_eq!(constant.bins[3].mean_pred, Some(0.35));
        assert!(t.calibration_curve(0).is_err());
    }

    #[test]
    fn base_rate_constant_forecast_is_calibrated() {
        let t = table(&[0.25; 8], &[1, 0, 0, 1, 0, 0, 0, 0]);
        assert_eq!(t.ece(10), Some(0.0));
    }

    #[test]
    fn confusion_from_table_matches_masks() {
        let f = [0.3, 0.5, 0.8, 0.9];
        let o = [true, false, true, false];
        let t = ScoreTable::from_cells(&f, &o).unwrap();
        let direct = ConfusionCounts::from_masks(&apply_threshold(&f, 0.5).unwrap(), &o).unwrap();
        assert_eq!(t.confusion(0.5), direct);
    }

    #[test]
    fn table_input_errors() {
        assert!(ScoreTable::from_cells(&[0.5], &[true, false]).is_err());
        assert!(ScoreTable::from_cells(&[1.5], &[true]).is_err());
        assert!(ScoreTable::from_cells(&[f64::NAN], &[true]).is_err());
    }

    #[test]
    fn merge_equals_pooled_construction() {
        let a = table(&[0.1, 0.5, 0.5, 0.9], &[0, 1, 0, 1]);
        let b = table(&[0.5, 0.7, 0.1], &[1, 1, 1]);
        let pooled = table(&[0.1, 0.5, 0.5, 0.9, 0.5, 0.7, 0.1], &[0, 1, 0, 1, 1, 1, 1]);
        assert_eq!(a.merge(&b), pooled);
        assert_eq!(b.merge(&a), pooled);
    }

    #[test]
    fn frame_levels_agree_with_direct_tables() {
        let f = [0.2, 0.7, 0.2, 0.0, 0.7, 1.0];
        let levels = FrameLevels::new(&f).unwrap();
        assert_eq!(levels.n_levels(), 4);
        let o1 = [true, true, false, false, false, true];
        let o2 = [false, true, true, false, true, true];
        let mut counts = levels.count(o1);
        counts.add(&levels.count(o2));
        let direct = ScoreTable::from_cells(&f, &o1).unwrap().merge(&ScoreTable::from_cells(&f, &o2).unwrap());
        assert_eq!(levels.table(&counts), direct);
    }

    #[test]
    fn metric_names_parse() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        let err = "logloss".parse::<Metric>().unwrap_err().to_string();
        assert!(err.contains("auc_pr") && err.contains("logloss"));
    }

    #[test]
    fn report_interval_contains_value() {
        let r = MetricReport::new(Metric::Mse, Stratum::Overall, Some(0.3), 10, Some((0.31, 0.4)));
        assert_eq!(r.ci, Some((0.3, 0.4)));
        let r = MetricReport::new(Metric::Mse, Stratum::Overall, None, 0, Some((0.31, 0.4)));
        assert_eq!(r.ci, None);
    }
}
