//! Monte-Carlo ensembles from one shared initial condition, and the
//! statistics extracted from them.
//!
//! A cell's burn indicator at time `t` is a Bernoulli variable; its ensemble
//! frequency is collected in a [`MicroStatMap`]. The grid-level macrostate
//! (burnt-cell count and unburnt-tree count per realization) is collected in
//! a [`MacroSeries`]. Reductions always run over traces in `sim_index` order
//! so floating-point results do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::engine::{initial_condition, run_from, SimulationTrace};
use crate::error::{Error, Result};
use crate::grid::{CellState, GridFrame, StateGrid};
use crate::rng::{mix, LAYOUT_STREAM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub base: SimConfig,
    pub n_sims: u32,
    /// Frames per trace (initial frame included); shorter runs are padded.
    pub trace_len: usize,
    /// First simulation index; members use `first_index..first_index + n_sims`.
    #[serde(default)]
    pub first_index: u32,
    /// When false every member draws its own layout and seeds.
    #[serde(default = "default_true")]
    pub shared_initial: bool,
}

fn default_true() -> bool {
    true
}

impl EnsembleSpec {
    pub fn new(base: SimConfig, n_sims: u32, trace_len: usize) -> Self {
        EnsembleSpec { base, n_sims, trace_len, first_index: 0, shared_initial: true }
    }

    pub fn with_s_level(&self, s_level: f64) -> Self {
        let mut spec = self.clone();
        spec.base.s_level = s_level;
        spec
    }

    fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.n_sims == 0 {
            return Err(Error::config("an ensemble needs at least one simulation"));
        }
        if self.trace_len == 0 {
            return Err(Error::config("trace_len must be >= 1"));
        }
        Ok(())
    }

    fn indices(&self) -> std::ops::Range<u32> {
        self.first_index..self.first_index + self.n_sims
    }
}

fn own_initial_condition(base: &SimConfig, sim_index: u32) -> Result<GridFrame> {
    let cfg = SimConfig { master_seed: mix(base.master_seed ^ LAYOUT_STREAM, u64::from(sim_index)), ..base.clone() };
    initial_condition(&cfg)
}

/// Runs every member of the ensemble in parallel. Traces come back padded
/// to `spec.trace_len` and ordered by `sim_index`.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<Vec<SimulationTrace>> {
    spec.validate()?;
    let len = spec.trace_len;
    if spec.shared_initial {
        let initial = initial_condition(&spec.base)?;
        Ok(spec
            .indices()
            .into_par_iter()
            .map(|i| {
                let mut trace = run_from(&initial, &spec.base, i, len);
                trace.fit_to_length(len);
                trace
            })
            .collect())
    } else {
        spec.indices()
            .into_par_iter()
            .map(|i| {
                let initial = own_initial_condition(&spec.base, i)?;
                let mut trace = run_from(&initial, &spec.base, i, len);
                trace.fit_to_length(len);
                Ok(trace)
            })
            .collect()
    }
}

fn check_aligned(traces: &[SimulationTrace]) -> Result<(usize, usize, usize)> {
    let first = traces.first().ok_or_else(|| Error::input("empty ensemble"))?;
    let (h, w, len) = (first.frames[0].height, first.frames[0].width, first.len());
    for tr in traces {
        if tr.len() != len {
            return Err(Error::input(format!(
                "trace {} has {} frames, expected {len}",
                tr.sim_index,
                tr.len()
            )));
        }
        if tr.frames[0].height != h || tr.frames[0].width != w {
            return Err(Error::input(format!("trace {} has a different grid shape", tr.sim_index)));
        }
    }
    Ok((len, h, w))
}

/// Per-cell burn frequency `(t, row, col)` over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroStatMap {
    pub t_len: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl MicroStatMap {
    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.values[t * n..(t + 1) * n]
    }

    pub fn frame_sum(&self, t: usize) -> f64 {
        self.frame(t).iter().sum()
    }
}

/// Burn frequencies; with `smoothing` each entry is `(k + 1) / (n + 2)`.
pub fn micro_stat_map_with(traces: &[SimulationTrace], smoothing: bool) -> Result<MicroStatMap> {
    let (len, h, w) = check_aligned(traces)?;
    let cells = h * w;
    let mut counts = vec![0u32; len * cells];
    for tr in traces {
        for (t, frame) in tr.frames.iter().enumerate() {
            for (c, s) in counts[t * cells..(t + 1) * cells].iter_mut().zip(&frame.cells) {
                *c += u32::from(s.is_burnt());
            }
        }
    }
    let n = traces.len() as f64;
    let values = counts
        .into_iter()
        .map(|k| if smoothing { (f64::from(k) + 1.0) / (n + 2.0) } else { f64::from(k) / n })
        .collect();
    Ok(MicroStatMap { t_len: len, height: h, width: w, values })
}

pub fn micro_stat_map(traces: &[SimulationTrace]) -> Result<MicroStatMap> {
    micro_stat_map_with(traces, false)
}

/// Grid-level macrostate per timestep across an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroSeries {
    pub initial_trees: usize,
    /// `burnt[t][k]`: burnt-cell count of the k-th trace at `t`.
    pub burnt: Vec<Vec<u32>>,
    /// `unburnt[t][k]`: unburnt-tree count of the k-th trace at `t`.
    pub unburnt: Vec<Vec<u32>>,
    pub mean_burnt: Vec<f64>,
    pub var_burnt: Vec<f64>,
    pub mean_unburnt: Vec<f64>,
    pub var_unburnt: Vec<f64>,
    grid_cells: usize,
}

fn mean_var(samples: &[u32]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&x| f64::from(x)).sum::<f64>() / n;
    let var = samples.iter().map(|&x| (f64::from(x) - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Population (divide-by-N) statistics of the macrostate.
pub fn macro_series(traces: &[SimulationTrace]) -> Result<MacroSeries> {
    let (len, h, w) = check_aligned(traces)?;
    if traces.len() < 2 {
        return Err(Error::input(format!("variance needs at least 2 traces, got {}", traces.len())));
    }
    let initial_trees = traces[0].initial_tree_count();
    let mut burnt = vec![Vec::with_capacity(traces.len()); len];
    let mut unburnt = vec![Vec::with_capacity(traces.len()); len];
    for tr in traces {
        for (t, frame) in tr.frames.iter().enumerate() {
            burnt[t].push(frame.burnt_count() as u32);
            unburnt[t].push(frame.count(CellState::Tree) as u32);
        }
    }
    let (mean_burnt, var_burnt) = burnt.iter().map(|s| mean_var(s)).unzip();
    let (mean_unburnt, var_unburnt) = unburnt.iter().map(|s| mean_var(s)).unzip();
    Ok(MacroSeries { initial_trees, burnt, unburnt, mean_burnt, var_burnt, mean_unburnt, var_unburnt, grid_cells: h * w })
}

impl MacroSeries {
    pub fn len(&self) -> usize {
        self.mean_burnt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_burnt.is_empty()
    }

    pub fn n_sims(&self) -> usize {
        self.burnt.first().map_or(0, Vec::len)
    }

    /// Burnt + unburnt-tree counts equal the initial tree count for every
    /// sample (integer identity).
    pub fn conservation_holds(&self) -> bool {
        self.burnt.iter().zip(&self.unburnt).all(|(b, u)| {
            b.iter().zip(u).all(|(&b, &u)| b as usize + u as usize == self.initial_trees)
        })
    }

    /// First timestep at which `mean_burnt` is within 0.1% of the grid of
    /// its final value, provided at least five steps remain; otherwise the
    /// last timestep.
    pub fn steady_state_t(&self) -> usize {
        let tol = 1e-3 * self.grid_cells as f64;
        let last = self.len() - 1;
        let end = self.mean_burnt[last];
        let start = self.mean_burnt.iter().position(|&m| (end - m).abs() < tol).unwrap_or(last);
        if last - start >= 5 {
            start
        } else {
            last
        }
    }

    pub fn sd_burnt(&self, t: usize) -> f64 {
        self.var_burnt[t].sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram of the unburnt-tree macrostate at `t`. The last bin
/// is closed on the right; a degenerate sample range gets a unit-width span
/// centred on the value.
pub fn steady_state_histogram(series: &MacroSeries, t: usize, bins: usize) -> Result<Vec<HistogramBin>> {
    if t >= series.len() {
        return Err(Error::input(format!("timestep {t} outside 0..{}", series.len())));
    }
    if bins == 0 {
        return Err(Error::input("histogram needs at least one bin"));
    }
    let samples = &series.unburnt[t];
    let min = f64::from(*samples.iter().min().expect("non-empty"));
    let max = f64::from(*samples.iter().max().expect("non-empty"));
    let (lo, hi) = if max > min { (min, max) } else { (min - 0.5, min + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|k| HistogramBin { lo: lo + k as f64 * width, hi: if k + 1 == bins { hi } else { lo + (k + 1) as f64 * width }, count: 0 })
        .collect();
    for &x in samples {
        let k = (((f64::from(x) - lo) / width) as usize).min(bins - 1);
        out[k].count += 1;
    }
    Ok(out)
}

/// Statistics for one S-Level of a sweep.
#[derive(Debug, Clone)]
pub struct SweepLevel {
    pub s_level: f64,
    pub macro_series: MacroSeries,
    pub micro: MicroStatMap,
}

/// One ensemble per S-Level, all sharing the initial condition of
/// `base.base.master_seed`.
pub fn slevel_sweep(base: &EnsembleSpec, s_levels: &[f64]) -> Result<Vec<SweepLevel>> {
    if s_levels.is_empty() {
        return Err(Error::input("empty S-Level list"));
    }
    s_levels
        .iter()
        .map(|&s| {
            let traces = run_ensemble(&base.with_s_level(s))?;
            Ok(SweepLevel { s_level: s, macro_series: macro_series(&traces)?, micro: micro_stat_map(&traces)? })
        })
        .collect()
}

/// Whether two traces start from the same initial states.
pub fn same_initial_condition(a: &SimulationTrace, b: &SimulationTrace) -> bool {
    a.frames.first().map(|f: &StateGrid| &f.cells) == b.frames.first().map(|f| &f.cells)
}
