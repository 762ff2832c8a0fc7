use std::fs;
use std::panic::AssertUnwindSafe;
use std::path::Path;

use firesim_core::ensemble::{macro_series, micro_stat_map, run_ensemble, steady_state_histogram};
use firesim_core::experiments::{
    dc_pairs, dc_stratified_eval, persistence_eval, time_stratified_eval, variance_sensitivity, DcForecaster,
    DcSource, ExperimentConfig, ExperimentKind, Horizon,
};
use firesim_core::io::stat::{self, StatFile};
use firesim_core::io::{tables, trace};
use firesim_core::metrics::{BootstrapConfig, MetricParams};
use firesim_core::{CellState, EnsembleSpec, ForecastMap, RealizationId, SimConfig, SimulationTrace};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::manifest::{RunManifest, MANIFEST_NAME};
use crate::output::OutputDir;
use crate::{EvaluateArgs, ExperimentArgs, SimulateArgs, StatsArgs, Stratify};

/// Realizations simulated and written per batch.
const BATCH: u32 = 64;

pub const STAT_NAME: &str = "micro_stat.ffst";

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".to_string())
}

/// Runs `body` against a fresh output directory and always leaves a
/// manifest behind. On failure the outputs written so far are removed and
/// the manifest records the error.
fn execute(
    command: &str,
    out: &Path,
    force: bool,
    owned: &[&str],
    workers: Option<usize>,
    body: impl FnOnce(&mut OutputDir, &mut RunManifest) -> CliResult,
) -> CliResult {
    let mut dir = OutputDir::prepare(out, owned, force)?;
    let mut manifest = RunManifest::start(command, workers);
    let result = std::panic::catch_unwind(AssertUnwindSafe(|| body(&mut dir, &mut manifest)))
        .unwrap_or_else(|p| Err(CliError::Internal(panic_message(p))));
    let (outputs, result) = match result {
        Ok(()) => match dir.records() {
            Ok(records) => (records, Ok(())),
            Err(e) => (Vec::new(), Err(e)),
        },
        Err(e) => {
            dir.discard();
            (Vec::new(), Err(e))
        }
    };
    manifest.finish(outputs, result.as_ref().err());
    manifest.write(dir.root())?;
    result
}

/// Every frame's burnt cells plus unburnt trees must equal the trace's
/// initial tree count.
fn check_conservation(traces: &[SimulationTrace]) -> CliResult {
    for tr in traces {
        let initial = tr.initial_tree_count();
        if let Some(t) = tr.frames.iter().position(|f| f.burnt_count() + f.count(CellState::Tree) != initial) {
            return Err(CliError::Internal(format!(
                "realization {} frame {t}: burnt plus unburnt trees differ from the initial {initial} trees",
                tr.sim_index
            )));
        }
    }
    Ok(())
}

pub fn simulate(a: SimulateArgs, workers: Option<usize>) -> CliResult {
    execute("simulate", &a.out, a.force, &[trace::EXTENSION], workers, |out, m| {
        let mut cfg = match &a.config {
            Some(p) => {
                m.add_input(p)?;
                SimConfig::from_json_file(p)?
            }
            None => SimConfig::default(),
        };
        if let Some(s) = a.s_level {
            cfg.s_level = s;
        }
        if let Some(seed) = a.seed {
            cfg.master_seed = seed;
        }
        cfg.validate()?;
        if a.sims == 0 {
            return Err(CliError::usage("--sims must be at least 1"));
        }
        let trace_len = cfg.max_steps as usize + 1;
        let end = a
            .first_index
            .checked_add(a.sims)
            .ok_or_else(|| CliError::usage("--first-index plus --sims overflows the index range"))?;
        m.set_config(&json!({ "sim": cfg, "sims": a.sims, "first_index": a.first_index, "trace_len": trace_len }))?;
        m.master_seeds = vec![cfg.master_seed];

        let mut first = a.first_index;
        while first < end {
            let n = BATCH.min(end - first);
            let spec = EnsembleSpec { first_index: first, ..EnsembleSpec::new(cfg.clone(), n, trace_len) };
            let traces = run_ensemble(&spec)?;
            check_conservation(&traces)?;
            for tr in &traces {
                out.write_bytes(&trace::file_name(tr.sim_index), &trace::encode(tr))?;
                m.realizations.push(RealizationId::of(tr));
            }
            first += n;
        }
        Ok(())
    })
}

/// Reads a trace directory, recording every file as an input.
fn load_traces(dir: &Path, m: &mut RunManifest) -> CliResult<Vec<SimulationTrace>> {
    let traces = trace::read_dir(dir)?;
    for p in trace::list_dir(dir)? {
        m.add_input(&p)?;
    }
    m.realizations = traces.iter().map(RealizationId::of).collect();
    Ok(traces)
}

pub fn stats(a: StatsArgs, workers: Option<usize>) -> CliResult {
    execute("stats", &a.out, a.force, &[stat::EXTENSION, "csv"], workers, |out, m| {
        if a.bins == 0 {
            return Err(CliError::usage("--bins must be at least 1"));
        }
        let mut traces = load_traces(&a.traces, m)?;
        let len = traces.iter().map(SimulationTrace::len).max().unwrap_or(1);
        for tr in &mut traces {
            tr.fit_to_length(len);
        }
        let cfg = traces[0].config.clone();
        m.master_seeds = vec![cfg.master_seed];

        let map = micro_stat_map(&traces)?;
        out.write_bytes(STAT_NAME, &stat::encode(&StatFile::from(&map)))?;
        let series = macro_series(&traces)?;
        check_conservation(&traces)?;
        out.write_with("macro.csv", |w| tables::write_macro(w, &[(cfg.s_level, &series)]))?;

        let t = a.at.unwrap_or_else(|| series.steady_state_t());
        if t >= series.len() {
            return Err(firesim_core::Error::Input(format!("--at {t} is past the last frame {}", series.len() - 1)).into());
        }
        let hist = steady_state_histogram(&series, t, a.bins)?;
        out.write_with("histogram.csv", |w| tables::write_histograms(w, &[(cfg.s_level, t, &hist)]))?;
        m.set_config(&json!({ "sim": cfg, "traces": traces.len(), "trace_len": len, "bins": a.bins, "histogram_t": t }))?;
        Ok(())
    })
}

/// Loads an FFST forecast. When it sits next to the manifest of the
/// `stats` run that produced it, the realizations it was fitted on are
/// restored so that scoring them is refused.
fn load_forecast(path: &Path, m: &mut RunManifest) -> CliResult<ForecastMap> {
    m.add_input(path)?;
    let mut forecast = ForecastMap::from_stat_file(stat::read(path)?);
    let sibling = path.parent().unwrap_or(Path::new(".")).join(MANIFEST_NAME);
    if sibling.is_file() {
        let producer = RunManifest::read(&sibling)?;
        if producer.command == "stats" {
            m.add_input(&sibling)?;
            forecast.fitted_on = producer.realizations;
        }
    }
    Ok(forecast)
}

pub fn evaluate(a: EvaluateArgs, workers: Option<usize>) -> CliResult {
    execute("evaluate", &a.out, a.force, &["csv"], workers, |out, m| {
        let horizon = Horizon { observe: a.observe, end: a.end };
        horizon.validate()?;
        if !(0.0..=1.0).contains(&a.threshold) || a.ece_bins == 0 {
            return Err(CliError::usage("--threshold must lie in [0, 1] and --ece-bins must be at least 1"));
        }
        if a.bins == Some(0) {
            return Err(CliError::usage("--bins must be at least 1"));
        }
        let params = MetricParams { threshold: a.threshold, ece_bins: a.ece_bins };
        let bootstrap = BootstrapConfig { resamples: a.resamples, level: a.ci_level, seed: a.bootstrap_seed };
        let persistence = a.forecast == "persistence";
        if persistence && a.ci {
            return Err(CliError::usage("--ci needs a forecast map"));
        }
        let forecast = if persistence { None } else { Some(load_forecast(Path::new(&a.forecast), m)?) };
        let traces = load_traces(&a.traces, m)?;
        if let Some(f) = &forecast {
            f.check_scorable(&traces)?;
        }
        m.master_seeds = vec![traces[0].config.master_seed, bootstrap.seed];
        m.set_config(&json!({
            "forecast": a.forecast,
            "stratify": format!("{:?}", a.stratify).to_lowercase(),
            "metrics": a.metrics,
            "horizon": horizon,
            "params": params,
            "bootstrap": bootstrap,
            "ci": a.ci,
            "bins": a.bins,
            "delta": a.delta,
        }))?;
        let label = if persistence {
            "persistence".to_string()
        } else {
            Path::new(&a.forecast).file_stem().map_or_else(|| a.forecast.clone(), |s| s.to_string_lossy().into_owned())
        };

        match a.stratify {
            Stratify::Time => {
                let reports = match &forecast {
                    Some(f) => {
                        time_stratified_eval(f, &traces, &a.metrics, &params, &horizon, a.ci.then_some(&bootstrap))?
                    }
                    None => persistence_eval(&traces, &a.metrics, &params, &horizon)?,
                };
                out.write_with("time_stratified.csv", |w| tables::write_reports(w, "forecast", &[(label, &reports)]))?;
            }
            Stratify::Variance => {
                let f = forecast.as_ref().ok_or_else(|| CliError::usage("variance stratification needs a forecast map"))?;
                let stat = variance_sensitivity(f, &traces, &a.metrics, &params, &horizon, a.bins.unwrap_or(20))?;
                out.write_with("variance_bins.csv", |w| tables::write_variance_bins(w, &stat))?;
                out.write_with("variance_pairs.csv", |w| tables::write_variance_pairs(w, &stat))?;
            }
            Stratify::Dc => {
                let forecaster = forecast.as_ref().map_or(DcForecaster::Persistence, DcForecaster::Map);
                let pairs = dc_pairs(&traces, forecaster, a.delta, &horizon)?;
                let table = dc_stratified_eval(&pairs, &a.metrics, &params, a.bins.unwrap_or(10), &bootstrap)?;
                out.write_with("dc_stratified.csv", |w| tables::write_reports(w, "forecast", &[(label, &table.rows)]))?;
                out.write_with("dc_pairs.csv", |w| tables::write_dc_pairs(w, &table))?;
            }
        }
        Ok(())
    })
}

pub fn experiment(a: ExperimentArgs, workers: Option<usize>) -> CliResult {
    execute("experiment", &a.out, a.force, &["csv"], workers, |out, m| {
        let cfg = match &a.config {
            Some(p) => {
                m.add_input(p)?;
                ExperimentConfig::from_json_str(&fs::read_to_string(p)?)?
            }
            None => ExperimentConfig::default(),
        };
        cfg.validate()?;
        m.set_config(&json!({ "kind": a.kind, "experiment": cfg }))?;
        m.master_seeds = vec![cfg.base.master_seed, cfg.bootstrap.seed];
        run_experiment(a.kind, &cfg, out)
    })
}

fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult {
    match kind {
        ExperimentKind::Sweep => {
            let levels = cfg.run_sweep()?;
            let blocks: Vec<(f64, &_)> = levels.iter().map(|l| (l.s_level, &l.macro_series)).collect();
            out.write_with("fig3a_macro.csv", |w| tables::write_macro(w, &blocks))?;
            out.write_with("fig3b_steady_state.csv", |w| tables::write_steady_state(w, &levels))?;
            let hists = levels
                .iter()
                .map(|l| {
                    let t = l.macro_series.steady_state_t();
                    Ok((l.s_level, t, steady_state_histogram(&l.macro_series, t, cfg.histogram_bins)?))
                })
                .collect::<firesim_core::Result<Vec<_>>>()?;
            let blocks: Vec<(f64, usize, &[_])> = hists.iter().map(|(s, t, h)| (*s, *t, &h[..])).collect();
            out.write_with("fig3c_histograms.csv", |w| tables::write_histograms(w, &blocks))?;
        }
        ExperimentKind::TimeStratified => {
            let levels = cfg.run_time_stratified()?;
            let blocks: Vec<(String, &[_])> = levels.iter().map(|(s, r)| (s.to_string(), &r[..])).collect();
            out.write_with("fig4_time_stratified.csv", |w| tables::write_reports(w, "s_level", &blocks))?;
        }
        ExperimentKind::Variance => {
            let stat = cfg.run_variance()?;
            out.write_with("fig6_sd_vs_var.csv", |w| tables::write_variance_bins(w, &stat))?;
            out.write_with("fig6_pairs.csv", |w| tables::write_variance_pairs(w, &stat))?;
        }
        ExperimentKind::Calibration => {
            let check = cfg.run_calibration()?;
            out.write_with("fig7_calibration.csv", |w| tables::write_calibration(w, &check.curve))?;
            out.write_with("fig7_scatter.csv", |w| tables::write_scatter(w, &check.scatter))?;
            out.write_with("fig7_frames.csv", |w| tables::write_frame_calibration(w, &check.frames))?;
        }
        ExperimentKind::Dc => {
            let table = cfg.run_dc()?;
            let source = match cfg.dc_source {
                DcSource::Persistence => "persistence",
                DcSource::Oracle => "oracle",
            };
            out.write_with("table3_dc_stratified.csv", |w| {
                tables::write_reports(w, "forecast", &[(source.to_string(), &table.rows)])
            })?;
            out.write_with("table3_pairs.csv", |w| tables::write_dc_pairs(w, &table))?;
        }
        ExperimentKind::CrossSlevel => {
            let report = cfg.run_cross_slevel()?;
            let blocks = [("mismatched".to_string(), &report.a[..]), ("matched".to_string(), &report.b[..])];
            out.write_with("fig10_cross_slevel.csv", |w| tables::write_reports(w, "oracle", &blocks))?;
        }
    }
    Ok(())
}
