//! Evaluation studies over held-out realizations: time-stratified scoring,
//! metric spread against macro-variance, oracle calibration, Dice-stratified
//! tables and the cross-S-Level comparison.
//!
//! Every result is a deterministic function of the forecasts, the traces and
//! the bootstrap seed; parallel work is collected in a fixed order.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::engine::SimulationTrace;
use crate::ensemble::{macro_series, micro_stat_map, run_ensemble, slevel_sweep, EnsembleSpec, SweepLevel};
use crate::error::{Error, Result};
use crate::forecast::{mismatched_oracle, oracle_forecast, persistence_forecast, split_holdout, ForecastMap};
use crate::grid::BinaryGrid;
use crate::metrics::{
    bin_index, dice, mean_ci, percentile_interval, resample_indices, BootstrapConfig, CalibrationCurve, FrameLevels,
    LevelCounts, Metric, MetricParams, MetricReport, ScoreTable, Stratum,
};

/// Observe frames `0..=observe`, predict frames `observe + 1..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Horizon {
    pub observe: usize,
    pub end: usize,
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon { observe: 10, end: 60 }
    }
}

impl Horizon {
    pub fn steps(&self) -> RangeInclusive<usize> {
        self.observe + 1..=self.end
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.observe)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Frames needed to cover the horizon.
    pub fn trace_len(&self) -> usize {
        self.end + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.observe >= self.end {
            return Err(Error::config(format!("empty horizon: observe {} >= end {}", self.observe, self.end)));
        }
        Ok(())
    }
}

fn check_inputs(forecast: &ForecastMap, eval: &[SimulationTrace], metrics: &[Metric], horizon: &Horizon) -> Result<()> {
    horizon.validate()?;
    if eval.is_empty() {
        return Err(Error::input("no evaluation realizations"));
    }
    if metrics.is_empty() {
        return Err(Error::input("no metrics requested"));
    }
    if horizon.end >= forecast.t_len {
        return Err(Error::input(format!("horizon ends at {} but the forecast has {} frames", horizon.end, forecast.t_len)));
    }
    forecast.check_scorable(eval)
}

/// One forecast frame with the outcome counts of every realization.
struct FrameCounts {
    levels: FrameLevels,
    per_sim: Vec<LevelCounts>,
}

impl FrameCounts {
    fn new(forecast: &ForecastMap, eval: &[SimulationTrace], t: usize) -> Result<Self> {
        let levels = FrameLevels::new(forecast.frame(t))?;
        let per_sim = eval.iter().map(|tr| levels.count_burnt(&tr.frames[t])).collect::<Result<_>>()?;
        Ok(FrameCounts { levels, per_sim })
    }

    fn pooled(&self, sims: impl IntoIterator<Item = usize>) -> ScoreTable {
        let mut c = LevelCounts::zeros(self.levels.n_levels());
        for k in sims {
            c.add(&self.per_sim[k]);
        }
        self.levels.table(&c)
    }
}

fn frame_counts(forecast: &ForecastMap, eval: &[SimulationTrace], horizon: &Horizon) -> Result<Vec<FrameCounts>> {
    horizon.steps().collect::<Vec<_>>().into_par_iter().map(|t| FrameCounts::new(forecast, eval, t)).collect()
}

fn merge_all(tables: &[ScoreTable]) -> ScoreTable {
    tables[1..].iter().fold(tables[0].clone(), |acc, t| acc.merge(t))
}

/// Metric values per timestep, then for all timesteps pooled.
fn score_rows(tables: &[ScoreTable], metrics: &[Metric], params: &MetricParams) -> Vec<Vec<Option<f64>>> {
    let row = |t: &ScoreTable| metrics.iter().map(|m| m.evaluate(t, params)).collect::<Vec<_>>();
    let mut rows: Vec<_> = tables.iter().map(row).collect();
    rows.push(row(&merge_all(tables)));
    rows
}

/// Pools the cells of all evaluation realizations at each timestep into one
/// scoring set and computes each metric once per timestep, plus an
/// `Overall` row pooling every timestep. With `bootstrap`, intervals come
/// from resampling realizations; the same config yields the same resamples
/// for every call, so intervals of different forecasts are paired.
pub fn time_stratified_eval(
    forecast: &ForecastMap,
    eval: &[SimulationTrace],
    metrics: &[Metric],
    params: &MetricParams,
    horizon: &Horizon,
    bootstrap: Option<&BootstrapConfig>,
) -> Result<Vec<MetricReport>> {
    check_inputs(forecast, eval, metrics, horizon)?;
    let frames = frame_counts(forecast, eval, horizon)?;
    let n = eval.len();
    let tables: Vec<ScoreTable> = frames.iter().map(|f| f.pooled(0..n)).collect();
    let point = score_rows(&tables, metrics, params);

    let intervals: Option<Vec<Vec<Option<(f64, f64)>>>> = bootstrap.filter(|_| n >= 2).map(|cfg| {
        let samples: Vec<Vec<Vec<Option<f64>>>> = resample_indices(n, cfg)
            .par_iter()
            .map(|idx| {
                let tables: Vec<ScoreTable> = frames.iter().map(|f| f.pooled(idx.iter().copied())).collect();
                score_rows(&tables, metrics, params)
            })
            .collect();
        (0..point.len())
            .map(|r| (0..metrics.len()).map(|j| percentile_interval(samples.iter().map(|s| s[r][j]), cfg.level)).collect())
            .collect()
    });

    let steps: Vec<usize> = horizon.steps().collect();
    let mut reports = Vec::with_capacity(point.len() * metrics.len());
    for (r, row) in point.iter().enumerate() {
        let (stratum, support) = match steps.get(r) {
            Some(&t) => (Stratum::Timestep(t), n),
            None => (Stratum::Overall, n * steps.len()),
        };
        for (j, &metric) in metrics.iter().enumerate() {
            let ci = intervals.as_ref().and_then(|c| c[r][j]);
            reports.push(MetricReport::new(metric, stratum, row[j], support, ci));
        }
    }
    Ok(reports)
}

/// Scores of one realization at one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub sim_index: u32,
    pub t: usize,
    /// `Var[Z_t]` of the evaluation ensemble.
    pub variance: f64,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinStat {
    pub metric: Metric,
    pub mean: Option<f64>,
    /// Population standard deviation of the defined values.
    pub sd: Option<f64>,
    /// Pairs where the metric was defined.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceBin {
    pub lo: f64,
    pub hi: f64,
    pub pairs: usize,
    pub stats: Vec<BinStat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceBinnedStat {
    pub metrics: Vec<Metric>,
    pub bins: Vec<VarianceBin>,
    pub pairs: Vec<PairScore>,
}

impl VarianceBinnedStat {
    fn column(&self, metric: Metric) -> Result<usize> {
        self.metrics
            .iter()
            .position(|&m| m == metric)
            .ok_or_else(|| Error::input(format!("metric {metric} was not evaluated")))
    }

    /// `(bin midpoint, SD)` for every bin where the SD is defined.
    pub fn sd_curve(&self, metric: Metric) -> Result<Vec<(f64, f64)>> {
        let j = self.column(metric)?;
        Ok(self.bins.iter().filter_map(|b| b.stats[j].sd.map(|sd| ((b.lo + b.hi) / 2.0, sd))).collect())
    }

    /// Pairs dropped from `metric` because it was undefined there.
    pub fn excluded(&self, metric: Metric) -> Result<usize> {
        let j = self.column(metric)?;
        Ok(self.pairs.iter().filter(|p| p.values[j].is_none()).count())
    }
}

/// Equal-width bins over `[min, max]`; a degenerate range becomes one
/// unit-width span starting at the value.
fn equal_width_edges(min: f64, max: f64, n: usize) -> (f64, f64) {
    let hi = if max > min { max } else { min + 1.0 };
    (min, (hi - min) / n as f64)
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

/// Scores every (realization, timestep) frame on its own, attaches the
/// ensemble's `Var[Z_t]`, and summarizes each metric per equal-width
/// variance bin.
pub fn variance_sensitivity(
    forecast: &ForecastMap,
    eval: &[SimulationTrace],
    metrics: &[Metric],
    params: &MetricParams,
    horizon: &Horizon,
    n_bins: usize,
) -> Result<VarianceBinnedStat> {
    check_inputs(forecast, eval, metrics, horizon)?;
    if n_bins == 0 {
        return Err(Error::input("variance binning needs at least one bin"));
    }
    let series = macro_series(eval)?;
    let frames = frame_counts(forecast, eval, horizon)?;
    let pairs: Vec<PairScore> = horizon
        .steps()
        .zip(&frames)
        .flat_map(|(t, f)| {
            let series = &series;
            f.per_sim.iter().zip(eval).map(move |(counts, tr)| {
                let table = f.levels.table(counts);
                PairScore {
                    sim_index: tr.sim_index,
                    t,
                    variance: series.var_burnt[t],
                    values: metrics.iter().map(|m| m.evaluate(&table, params)).collect(),
                }
            })
        })
        .collect();

    let min = pairs.iter().map(|p| p.variance).fold(f64::INFINITY, f64::min);
    let max = pairs.iter().map(|p| p.variance).fold(f64::NEG_INFINITY, f64::max);
    let (lo, width) = equal_width_edges(min, max, n_bins);
    let mut members: Vec<Vec<&PairScore>> = vec![Vec::new(); n_bins];
    for p in &pairs {
        let k = (((p.variance - lo) / width) as usize).min(n_bins - 1);
        members[k].push(p);
    }
    let bins = members
        .iter()
        .enumerate()
        .map(|(k, ps)| {
            let stats = metrics
                .iter()
                .enumerate()
                .map(|(j, &metric)| {
                    let values: Vec<f64> = ps.iter().filter_map(|p| p.values[j]).collect();
                    let (mean, sd) = mean_sd(&values);
                    BinStat { metric, mean, sd, support: values.len() }
                })
                .collect();
            let bin_lo = lo + k as f64 * width;
            let bin_hi = if k + 1 == n_bins { lo + n_bins as f64 * width } else { lo + (k + 1) as f64 * width };
            VarianceBin { lo: bin_lo, hi: bin_hi, pairs: ps.len(), stats }
        })
        .collect();
    Ok(VarianceBinnedStat { metrics: metrics.to_vec(), bins, pairs })
}

fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties; `None` with
/// fewer than two points or a constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

/// Number of horizon cells with a given (forecast, statistic) value pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub forecast: f64,
    pub statistic: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameCalibration {
    pub t: usize,
    pub mean_forecast: f64,
    pub mean_statistic: f64,
    pub ece: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCheck {
    pub scatter: Vec<ScatterPoint>,
    pub frames: Vec<FrameCalibration>,
    /// Calibration over every horizon cell of every evaluation realization.
    pub curve: CalibrationCurve,
    pub ece: Option<f64>,
}

/// Compares a forecast with the burn frequency of the evaluation ensemble
/// (cell by cell and frame by frame), and with its realized outcomes
/// through a calibration curve of `bins` equal-width bins.
pub fn calibration_check(
    forecast: &ForecastMap,
    eval: &[SimulationTrace],
    horizon: &Horizon,
    bins: usize,
) -> Result<CalibrationCheck> {
    check_inputs(forecast, eval, &[Metric::Ece], horizon)?;
    let statistic = micro_stat_map(eval)?;
    let frames = frame_counts(forecast, eval, horizon)?;
    let n = eval.len();
    let tables: Vec<ScoreTable> = frames.iter().map(|f| f.pooled(0..n)).collect();

    // Both values are non-negative, so bit patterns sort numerically.
    let mut scatter: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let mut per_frame = Vec::with_capacity(tables.len());
    for (t, table) in horizon.steps().zip(&tables) {
        let (f, s) = (forecast.frame(t), statistic.frame(t));
        for (&p, &q) in f.iter().zip(s) {
            *scatter.entry((p.to_bits(), q.to_bits())).or_default() += 1;
        }
        let cells = f.len() as f64;
        per_frame.push(FrameCalibration {
            t,
            mean_forecast: f.iter().sum::<f64>() / cells,
            mean_statistic: s.iter().sum::<f64>() / cells,
            ece: table.ece(bins),
        });
    }
    let curve = merge_all(&tables).calibration_curve(bins)?;
    Ok(CalibrationCheck {
        scatter: scatter
            .into_iter()
            .map(|((p, q), count)| ScatterPoint { forecast: f64::from_bits(p), statistic: f64::from_bits(q), count })
            .collect(),
        frames: per_frame,
        ece: curve.ece(),
        curve,
    })
}

/// [`calibration_check`] of the oracle fitted on `train`.
pub fn oracle_calibration_check(
    train: &[SimulationTrace],
    eval: &[SimulationTrace],
    horizon: &Horizon,
    bins: usize,
) -> Result<CalibrationCheck> {
    let forecast = oracle_forecast(train, eval)?;
    calibration_check(&forecast, eval, horizon, bins)
}

/// A mask at `t`, the mask at `t + delta`, and a forecast of the latter.
#[derive(Debug, Clone, PartialEq)]
pub struct DcPair<'a> {
    pub sim_index: u32,
    pub t: usize,
    pub current: BinaryGrid,
    pub next: BinaryGrid,
    pub forecast: Cow<'a, [f64]>,
}

#[derive(Debug, Clone, Copy)]
pub enum DcForecaster<'a> {
    /// The mask at `t`, frozen.
    Persistence,
    /// The frame of a forecast map at `t + delta`.
    Map(&'a ForecastMap),
}

/// Pairs `(t, t + delta)` for `t = observe, observe + delta, ...` with
/// `t + delta <= end`, from every trace. Pairs where neither mask has a
/// burnt cell (the fire never started) are skipped, since their Dice
/// coefficient is undefined.
pub fn dc_pairs<'a>(
    traces: &[SimulationTrace],
    forecaster: DcForecaster<'a>,
    delta: usize,
    horizon: &Horizon,
) -> Result<Vec<DcPair<'a>>> {
    if delta == 0 {
        return Err(Error::input("pair offset must be >= 1"));
    }
    if let DcForecaster::Map(f) = forecaster {
        f.check_scorable(traces)?;
        if horizon.end >= f.t_len {
            return Err(Error::input(format!("horizon ends at {} but the forecast has {} frames", horizon.end, f.t_len)));
        }
    }
    let mut pairs = Vec::new();
    for tr in traces {
        if horizon.end >= tr.len() {
            return Err(Error::input(format!("trace {} has {} frames, horizon ends at {}", tr.sim_index, tr.len(), horizon.end)));
        }
        let mut t = horizon.observe;
        while t + delta <= horizon.end {
            let current = tr.frames[t].burnt_mask();
            let next = tr.frames[t + delta].burnt_mask();
            if current.count_ones() == 0 && next.count_ones() == 0 {
                t += delta;
                continue;
            }
            let forecast = match forecaster {
                DcForecaster::Persistence => {
                    Cow::Owned(current.cells.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
                }
                DcForecaster::Map(f) => Cow::Borrowed(f.frame(t + delta)),
            };
            pairs.push(DcPair { sim_index: tr.sim_index, t, current, next, forecast });
            t += delta;
        }
    }
    Ok(pairs)
}

/// Scores of one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DcPairScore {
    pub sim_index: u32,
    pub t: usize,
    pub dice: f64,
    pub bin: usize,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcTable {
    pub metrics: Vec<Metric>,
    /// Bin rows in order, then the `Overall` rows.
    pub rows: Vec<MetricReport>,
    pub pairs: Vec<DcPairScore>,
}

/// Stratifies per-pair scores by the Dice coefficient between the two masks
/// of each pair. Each row holds the mean of the defined per-pair values with
/// a bootstrap interval over pairs; `support` is the number of pairs in the
/// bin.
pub fn dc_stratified_eval(
    pairs: &[DcPair<'_>],
    metrics: &[Metric],
    params: &MetricParams,
    n_bins: usize,
    bootstrap: &BootstrapConfig,
) -> Result<DcTable> {
    if metrics.is_empty() {
        return Err(Error::input("no metrics requested"));
    }
    if n_bins == 0 {
        return Err(Error::input("Dice binning needs at least one bin"));
    }
    let scored: Vec<DcPairScore> = pairs
        .par_iter()
        .map(|p| {
            let dc = dice(&p.current, &p.next)?.ok_or_else(|| {
                Error::input(format!("pair (sim {}, t {}) has two empty masks; Dice is undefined", p.sim_index, p.t))
            })?;
            let table = ScoreTable::from_cells(&p.forecast, &p.next.cells)?;
            Ok(DcPairScore {
                sim_index: p.sim_index,
                t: p.t,
                dice: dc,
                bin: bin_index(dc, n_bins),
                values: metrics.iter().map(|m| m.evaluate(&table, params)).collect(),
            })
        })
        .collect::<Result<_>>()?;

    let row = |members: &[&DcPairScore], stratum: Stratum, rows: &mut Vec<MetricReport>| {
        for (j, &metric) in metrics.iter().enumerate() {
            let values: Vec<f64> = members.iter().filter_map(|p| p.values[j]).collect();
            let (mean, _) = mean_sd(&values);
            rows.push(MetricReport::new(metric, stratum, mean, members.len(), mean_ci(&values, bootstrap)));
        }
    };
    let mut rows = Vec::with_capacity((n_bins + 1) * metrics.len());
    for k in 0..n_bins {
        let members: Vec<&DcPairScore> = scored.iter().filter(|p| p.bin == k).collect();
        let stratum = Stratum::Dice { lo: k as f64 / n_bins as f64, hi: (k + 1) as f64 / n_bins as f64 };
        row(&members, stratum, &mut rows);
    }
    row(&scored.iter().collect::<Vec<_>>(), Stratum::Overall, &mut rows);
    Ok(DcTable { metrics: metrics.to_vec(), rows, pairs: scored })
}

/// Time-stratified reports of two forecasts on the same realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSlevelReport {
    pub a: Vec<MetricReport>,
    pub b: Vec<MetricReport>,
}

pub fn cross_slevel_eval(
    oracle_a: &ForecastMap,
    oracle_b: &ForecastMap,
    eval: &[SimulationTrace],
    metrics: &[Metric],
    params: &MetricParams,
    horizon: &Horizon,
    bootstrap: &BootstrapConfig,
) -> Result<CrossSlevelReport> {
    Ok(CrossSlevelReport {
        a: time_stratified_eval(oracle_a, eval, metrics, params, horizon, Some(bootstrap))?,
        b: time_stratified_eval(oracle_b, eval, metrics, params, horizon, Some(bootstrap))?,
    })
}

/// Whether two closed intervals intersect.
pub fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Sweep,
    TimeStratified,
    Variance,
    Calibration,
    Dc,
    CrossSlevel,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Sweep,
        ExperimentKind::TimeStratified,
        ExperimentKind::Variance,
        ExperimentKind::Calibration,
        ExperimentKind::Dc,
        ExperimentKind::CrossSlevel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::TimeStratified => "time_stratified",
            ExperimentKind::Variance => "variance",
            ExperimentKind::Calibration => "calibration",
            ExperimentKind::Dc => "dc",
            ExperimentKind::CrossSlevel => "cross_slevel",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let valid: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            Error::input(format!("unknown experiment '{s}'; valid kinds: {}", valid.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcSource {
    #[default]
    Persistence,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub base: SimConfig,
    /// Realizations per ensemble, split into training and evaluation halves.
    pub n_sims: u32,
    pub train_fraction: f64,
    /// S-Level of single-level studies and the evaluation level of the
    /// cross-S-Level study.
    pub s_level: f64,
    /// Level of the mismatched oracle in the cross-S-Level study.
    pub oracle_s_level: f64,
    pub sweep_levels: Vec<f64>,
    pub eval_levels: Vec<f64>,
    pub horizon: Horizon,
    pub metrics: Vec<Metric>,
    pub params: MetricParams,
    pub variance_bins: usize,
    pub histogram_bins: usize,
    pub dc_bins: usize,
    pub dc_delta: usize,
    pub dc_source: DcSource,
    pub bootstrap: BootstrapConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            base: SimConfig::default(),
            n_sims: 200,
            train_fraction: 0.5,
            s_level: 20.0,
            oracle_s_level: 10.0,
            sweep_levels: (0..=10).map(|k| f64::from(k) * 5.0).collect(),
            eval_levels: (0..=4).map(|k| f64::from(k) * 5.0).collect(),
            horizon: Horizon::default(),
            metrics: Metric::ALL.to_vec(),
            params: MetricParams::default(),
            variance_bins: 20,
            histogram_bins: 30,
            dc_bins: 10,
            dc_delta: 5,
            dc_source: DcSource::Persistence,
            bootstrap: BootstrapConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.horizon.validate()?;
        if self.n_sims < 2 {
            return Err(Error::config("experiments need at least 2 simulations"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction must lie in (0, 1)"));
        }
        if self.sweep_levels.is_empty() || self.eval_levels.is_empty() {
            return Err(Error::config("S-Level lists must be non-empty"));
        }
        for &s in self.sweep_levels.iter().chain(&self.eval_levels).chain([&self.s_level, &self.oracle_s_level]) {
            if !(0.0..=100.0).contains(&s) {
                return Err(Error::config(format!("S-Level {s} outside [0, 100]")));
            }
        }
        if self.metrics.is_empty() {
            return Err(Error::config("no metrics configured"));
        }
        if self.variance_bins == 0 || self.histogram_bins == 0 || self.dc_bins == 0 || self.dc_delta == 0 {
            return Err(Error::config("bin counts and dc_delta must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.params.threshold) || self.params.ece_bins == 0 {
            return Err(Error::config("threshold must lie in [0, 1] and ece_bins must be >= 1"));
        }
        Ok(())
    }

    fn spec(&self, s_level: f64, n_sims: u32, trace_len: usize) -> EnsembleSpec {
        EnsembleSpec::new(SimConfig { s_level, ..self.base.clone() }, n_sims, trace_len)
    }

    /// A held-out ensemble at `s_level`: the first `train_fraction` of the
    /// realizations train, the rest evaluate.
    pub fn holdout(&self, s_level: f64) -> Result<(Vec<SimulationTrace>, Vec<SimulationTrace>)> {
        let traces = run_ensemble(&self.spec(s_level, self.n_sims, self.horizon.trace_len()))?;
        split_holdout(traces, self.train_fraction)
    }

    pub fn run_sweep(&self) -> Result<Vec<SweepLevel>> {
        let len = self.base.max_steps as usize + 1;
        slevel_sweep(&self.spec(0.0, self.n_sims, len), &self.sweep_levels)
    }

    /// Matched-oracle time-stratified reports for every evaluation level.
    pub fn run_time_stratified(&self) -> Result<Vec<(f64, Vec<MetricReport>)>> {
        self.eval_levels
            .iter()
            .map(|&s| {
                let (train, eval) = self.holdout(s)?;
                let oracle = oracle_forecast(&train, &eval)?;
                let reports =
                    time_stratified_eval(&oracle, &eval, &self.metrics, &self.params, &self.horizon, Some(&self.bootstrap))?;
                Ok((s, reports))
            })
            .collect()
    }

    pub fn run_variance(&self) -> Result<VarianceBinnedStat> {
        let (train, eval) = self.holdout(self.s_level)?;
        let oracle = oracle_forecast(&train, &eval)?;
        variance_sensitivity(&oracle, &eval, &self.metrics, &self.params, &self.horizon, self.variance_bins)
    }

    pub fn run_calibration(&self) -> Result<CalibrationCheck> {
        let (train, eval) = self.holdout(self.s_level)?;
        oracle_calibration_check(&train, &eval, &self.horizon, self.params.ece_bins)
    }

    pub fn run_dc(&self) -> Result<DcTable> {
        let (train, eval) = self.holdout(self.s_level)?;
        let oracle;
        let forecaster = match self.dc_source {
            DcSource::Persistence => DcForecaster::Persistence,
            DcSource::Oracle => {
                oracle = oracle_forecast(&train, &eval)?;
                DcForecaster::Map(&oracle)
            }
        };
        let pairs = dc_pairs(&eval, forecaster, self.dc_delta, &self.horizon)?;
        dc_stratified_eval(&pairs, &self.metrics, &self.params, self.dc_bins, &self.bootstrap)
    }

    /// Oracle at `oracle_s_level` (report `a`) against the matched oracle
    /// (report `b`), both scored on held-out realizations at `s_level`.
    pub fn run_cross_slevel(&self) -> Result<CrossSlevelReport> {
        let (train_b, eval_b) = self.holdout(self.s_level)?;
        let source = run_ensemble(&self.spec(self.oracle_s_level, train_b.len() as u32, self.horizon.trace_len()))?;
        let a = mismatched_oracle(&source, &eval_b)?;
        let b = oracle_forecast(&train_b, &eval_b)?;
        cross_slevel_eval(&a, &b, &eval_b, &self.metrics, &self.params, &self.horizon, &self.bootstrap)
    }
}

/// Persistence forecasts scored like [`time_stratified_eval`], one
/// observed realization at a time, then pooled per timestep.
pub fn persistence_eval(
    eval: &[SimulationTrace],
    metrics: &[Metric],
    params: &MetricParams,
    horizon: &Horizon,
) -> Result<Vec<MetricReport>> {
    horizon.validate()?;
    let mut pooled: Vec<Option<ScoreTable>> = vec![None; horizon.len()];
    for tr in eval {
        let f = persistence_forecast(tr, horizon.observe, horizon.trace_len())?;
        for (slot, t) in pooled.iter_mut().zip(horizon.steps()) {
            let outcome: Vec<bool> = tr.frames[t].cells.iter().map(|s| s.is_burnt()).collect();
            let table = ScoreTable::from_cells(f.frame(t), &outcome)?;
            *slot = Some(match slot.take() {
                Some(acc) => acc.merge(&table),
                None => table,
            });
        }
    }
    let tables: Vec<ScoreTable> = pooled.into_iter().map(|t| t.ok_or_else(|| Error::input("no evaluation realizations"))).collect::<Result<_>>()?;
    let rows = score_rows(&tables, metrics, params);
    let steps: Vec<usize> = horizon.steps().collect();
    let n = eval.len();
    Ok(rows
        .iter()
        .enumerate()
        .flat_map(|(r, row)| {
            let (stratum, support) = match steps.get(r) {
                Some(&t) => (Stratum::Timestep(t), n),
                None => (Stratum::Overall, n * steps.len()),
            };
            metrics.iter().zip(row).map(move |(&m, &v)| MetricReport::new(m, stratum, v, support, None))
        })
        .collect())
}
