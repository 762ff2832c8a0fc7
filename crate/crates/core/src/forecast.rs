//! Probability-map forecasters: holdout ensemble oracles and baselines.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::engine::SimulationTrace;
use crate::ensemble::{micro_stat_map, same_initial_condition};
use crate::error::{Error, Result};
use crate::io::stat::StatFile;

/// Identity of one realization: its random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RealizationId {
    pub master_seed: u64,
    pub sim_index: u32,
}

impl RealizationId {
    pub fn of(trace: &SimulationTrace) -> Self {
        RealizationId { master_seed: trace.config.master_seed, sim_index: trace.sim_index }
    }
}

/// Per-cell burn probabilities `(t, row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastMap {
    pub t_len: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    /// Realizations the forecast was estimated from; these may never be
    /// scored against it.
    pub fitted_on: Vec<RealizationId>,
}

impl ForecastMap {
    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.values[t * n..(t + 1) * n]
    }

    pub fn from_stat_file(file: StatFile) -> Self {
        ForecastMap { t_len: file.t_len, height: file.height, width: file.width, values: file.values, fitted_on: Vec::new() }
    }

    /// Fails when any of `eval` was used to fit this forecast, or when the
    /// shapes disagree.
    pub fn check_scorable(&self, eval: &[SimulationTrace]) -> Result<()> {
        let fitted: HashSet<RealizationId> = self.fitted_on.iter().copied().collect();
        if let Some(tr) = eval.iter().find(|tr| fitted.contains(&RealizationId::of(tr))) {
            return Err(Error::Contamination(format!(
                "realization {} (seed {}) was used to fit the forecast",
                tr.sim_index, tr.config.master_seed
            )));
        }
        for tr in eval {
            let f0 = &tr.frames[0];
            if f0.height != self.height || f0.width != self.width {
                return Err(Error::input(format!(
                    "trace {} is {}x{} but the forecast is {}x{}",
                    tr.sim_index, f0.height, f0.width, self.height, self.width
                )));
            }
            if tr.len() < self.t_len {
                return Err(Error::input(format!(
                    "trace {} has {} frames, forecast has {}",
                    tr.sim_index,
                    tr.len(),
                    self.t_len
                )));
            }
        }
        Ok(())
    }
}

/// Splits an ensemble (in order) into training and evaluation parts.
pub fn split_holdout(mut traces: Vec<SimulationTrace>, train_fraction: f64) -> Result<(Vec<SimulationTrace>, Vec<SimulationTrace>)> {
    if !(0.0..1.0).contains(&train_fraction) || train_fraction == 0.0 {
        return Err(Error::input(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let n_train = (traces.len() as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train == traces.len() {
        return Err(Error::input(format!("cannot split {} traces at {train_fraction}", traces.len())));
    }
    let eval = traces.split_off(n_train);
    Ok((traces, eval))
}

fn layout_key(c: &SimConfig) -> SimConfig {
    SimConfig { s_level: 0.0, ..c.clone() }
}

fn check_sources(train: &[SimulationTrace], eval: &[SimulationTrace], allow_level_mismatch: bool) -> Result<()> {
    let (t0, e0) = match (train.first(), eval.first()) {
        (Some(t), Some(e)) => (t, e),
        _ => return Err(Error::input("oracle needs non-empty training and evaluation sets")),
    };
    let train_ids: HashSet<RealizationId> = train.iter().map(RealizationId::of).collect();
    if let Some(tr) = eval.iter().find(|tr| train_ids.contains(&RealizationId::of(tr))) {
        return Err(Error::Contamination(format!(
            "realization {} appears in both the training and the evaluation set",
            tr.sim_index
        )));
    }
    if !train.iter().chain(eval).all(|tr| same_initial_condition(tr, t0)) {
        return Err(Error::input("training and evaluation traces do not share one initial condition"));
    }
    let same = if allow_level_mismatch {
        layout_key(&t0.config) == layout_key(&e0.config)
    } else {
        t0.config == e0.config
    };
    if !same {
        return Err(Error::input("training and evaluation ensembles were generated with different configurations"));
    }
    Ok(())
}

fn fitted(train: &[SimulationTrace]) -> Result<ForecastMap> {
    let map = micro_stat_map(train)?;
    Ok(ForecastMap {
        t_len: map.t_len,
        height: map.height,
        width: map.width,
        values: map.values,
        fitted_on: train.iter().map(RealizationId::of).collect(),
    })
}

/// The ensemble burn frequency of `train`, for scoring against the disjoint
/// realizations `eval` of the same process.
pub fn oracle_forecast(train: &[SimulationTrace], eval: &[SimulationTrace]) -> Result<ForecastMap> {
    check_sources(train, eval, false)?;
    fitted(train)
}

/// Like [`oracle_forecast`], but `source` may come from a different S-Level
/// than `eval`; everything else, including the initial condition, must match.
pub fn mismatched_oracle(source: &[SimulationTrace], eval: &[SimulationTrace]) -> Result<ForecastMap> {
    check_sources(source, eval, true)?;
    fitted(source)
}

/// Freezes the burnt mask observed at `t0`: frames before `t0` reproduce
/// the observation, later frames repeat the mask at `t0`.
pub fn persistence_forecast(observed: &SimulationTrace, t0: usize, t_len: usize) -> Result<ForecastMap> {
    if t0 == 0 || t0 >= observed.len() {
        return Err(Error::input(format!("observation horizon {t0} outside 1..{}", observed.len())));
    }
    let f0 = &observed.frames[0];
    let mut values = Vec::with_capacity(t_len * f0.cells.len());
    for t in 0..t_len {
        let frame = &observed.frames[t.min(t0)];
        values.extend(frame.cells.iter().map(|s| if s.is_burnt() { 1.0 } else { 0.0 }));
    }
    Ok(ForecastMap {
        t_len,
        height: f0.height,
        width: f0.width,
        values,
        fitted_on: vec![RealizationId::of(observed)],
    })
}

pub fn constant_forecast(c: f64, t_len: usize, height: usize, width: usize) -> Result<ForecastMap> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::input(format!("constant forecast {c} outside [0, 1]")));
    }
    Ok(ForecastMap { t_len, height, width, values: vec![c; t_len * height * width], fitted_on: Vec::new() })
}
