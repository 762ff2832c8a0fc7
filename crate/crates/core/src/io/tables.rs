//! CSV tables. Undefined values are written as `NA`; floats use the
//! shortest representation that parses back to the same value.

use std::io::Write;

use crate::ensemble::{HistogramBin, MacroSeries, SweepLevel};
use crate::error::Result;
use crate::experiments::{DcTable, FrameCalibration, ScatterPoint, VarianceBinnedStat};
use crate::metrics::{CalibrationCurve, MetricReport};

pub const NA: &str = "NA";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn num(v: f64) -> String {
    v.to_string()
}

/// `s_level,t,mean_burnt,var_burnt,mean_unburnt,var_unburnt`, one block per level.
pub fn write_macro<W: Write>(w: W, blocks: &[(f64, &MacroSeries)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s_level", "t", "mean_burnt", "var_burnt", "mean_unburnt", "var_unburnt"])?;
    for &(s, series) in blocks {
        for t in 0..series.len() {
            out.write_record([
                num(s),
                t.to_string(),
                num(series.mean_burnt[t]),
                num(series.var_burnt[t]),
                num(series.mean_unburnt[t]),
                num(series.var_unburnt[t]),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `s_level,t,bin_lo,bin_hi,count` over unburnt-tree counts.
pub fn write_histograms<W: Write>(w: W, blocks: &[(f64, usize, &[HistogramBin])]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s_level", "t", "bin_lo", "bin_hi", "count"])?;
    for &(s, t, bins) in blocks {
        for b in bins {
            out.write_record([num(s), t.to_string(), num(b.lo), num(b.hi), b.count.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Steady-state summary per level: `s_level,t,mean_burnt,sd_burnt,mean_unburnt,sd_unburnt`.
pub fn write_steady_state<W: Write>(w: W, levels: &[SweepLevel]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s_level", "t", "mean_burnt", "sd_burnt", "mean_unburnt", "sd_unburnt"])?;
    for level in levels {
        let m = &level.macro_series;
        let t = m.steady_state_t();
        out.write_record([
            num(level.s_level),
            t.to_string(),
            num(m.mean_burnt[t]),
            num(m.sd_burnt(t)),
            num(m.mean_unburnt[t]),
            num(m.var_unburnt[t].sqrt()),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `<key>,stratum,stratum_lo,stratum_hi,metric,value,support,ci_lo,ci_hi`.
pub fn write_reports<W: Write>(w: W, key: &str, blocks: &[(String, &[MetricReport])]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([key, "stratum", "stratum_lo", "stratum_hi", "metric", "value", "support", "ci_lo", "ci_hi"])?;
    for (label, reports) in blocks {
        for r in reports.iter() {
            let (lo, hi) = r.stratum.bounds();
            out.write_record([
                label.clone(),
                r.stratum.kind().to_string(),
                opt(lo),
                opt(hi),
                r.metric.to_string(),
                opt(r.value),
                r.support.to_string(),
                opt(r.ci.map(|c| c.0)),
                opt(r.ci.map(|c| c.1)),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `bin,bin_lo,bin_hi,pairs,metric,mean,sd,support`.
pub fn write_variance_bins<W: Write>(w: W, stat: &VarianceBinnedStat) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["bin", "bin_lo", "bin_hi", "pairs", "metric", "mean", "sd", "support"])?;
    for (k, b) in stat.bins.iter().enumerate() {
        for s in &b.stats {
            out.write_record([
                k.to_string(),
                num(b.lo),
                num(b.hi),
                b.pairs.to_string(),
                s.metric.to_string(),
                opt(s.mean),
                opt(s.sd),
                s.support.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `sim_index,t,variance,<metric>...`, one row per scored frame.
pub fn write_variance_pairs<W: Write>(w: W, stat: &VarianceBinnedStat) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["sim_index".to_string(), "t".to_string(), "variance".to_string()];
    header.extend(stat.metrics.iter().map(|m| m.to_string()));
    out.write_record(&header)?;
    for p in &stat.pairs {
        let mut row = vec![p.sim_index.to_string(), p.t.to_string(), num(p.variance)];
        row.extend(p.values.iter().map(|&v| opt(v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `bin_lo,bin_hi,mean_pred,mean_obs,count`.
pub fn write_calibration<W: Write>(w: W, curve: &CalibrationCurve) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["bin_lo", "bin_hi", "mean_pred", "mean_obs", "count"])?;
    for b in &curve.bins {
        out.write_record([num(b.lo), num(b.hi), opt(b.mean_pred), opt(b.mean_obs), b.count.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// `forecast,statistic,count`.
pub fn write_scatter<W: Write>(w: W, points: &[ScatterPoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["forecast", "statistic", "count"])?;
    for p in points {
        out.write_record([num(p.forecast), num(p.statistic), p.count.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// `t,mean_forecast,mean_statistic,ece`.
pub fn write_frame_calibration<W: Write>(w: W, frames: &[FrameCalibration]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "mean_forecast", "mean_statistic", "ece"])?;
    for f in frames {
        out.write_record([f.t.to_string(), num(f.mean_forecast), num(f.mean_statistic), opt(f.ece)])?;
    }
    out.flush()?;
    Ok(())
}

/// `sim_index,t,dice,bin,<metric>...`, one row per pair.
pub fn write_dc_pairs<W: Write>(w: W, table: &DcTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["sim_index".to_string(), "t".to_string(), "dice".to_string(), "bin".to_string()];
    header.extend(table.metrics.iter().map(|m| m.to_string()));
    out.write_record(&header)?;
    for p in &table.pairs {
        let mut row = vec![p.sim_index.to_string(), p.t.to_string(), num(p.dice), p.bin.to_string()];
        row.extend(p.values.iter().map(|&v| opt(v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a cell written by these writers.
pub fn parse_opt(cell: &str) -> Option<f64> {
    if cell == NA {
        None
    } else {
        cell.parse().ok()
    }
}
