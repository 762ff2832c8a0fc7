//! `FFCA` trace files.
//!
//! ```text
//! magic "FFCA" | version u16 | H u32 | W u32 | T u32
//! | s_level*100 u32 | density*1e6 u32 | master_seed u64 | sim_index u32
//! | alpha*1e6 u32 | q_threshold f64 | i_seed f64 | q_die f64 | q_dead f64
//! | T*H*W state bytes (t-major, row-major; 0 NoTree .. 4 Dead)
//! ```
//!
//! All integers and floats are little-endian. Heat is not stored.

use std::fs;
use std::path::{Path, PathBuf};

use super::{format_err, Reader};
use crate::config::SimConfig;
use crate::engine::SimulationTrace;
use crate::error::{Error, Result};
use crate::grid::{CellState, StateGrid};

pub const MAGIC: &[u8; 4] = b"FFCA";
pub const VERSION: u16 = 1;
pub const EXTENSION: &str = "ffca";
const HEADER_LEN: usize = 4 + 2 + 4 * 3 + 4 + 4 + 8 + 4 + 4 + 8 * 4;

/// Header fields exactly as stored (fixed-point values kept scaled).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceHeader {
    pub version: u16,
    pub height: u32,
    pub width: u32,
    pub t_len: u32,
    pub s_level_centi: u32,
    pub density_micro: u32,
    pub master_seed: u64,
    pub sim_index: u32,
    pub alpha_micro: u32,
    pub q_threshold: f64,
    pub i_seed: f64,
    pub q_die: f64,
    pub q_dead: f64,
}

fn fixed(v: f64, scale: f64) -> u32 {
    (v * scale).round() as u32
}

impl TraceHeader {
    pub fn for_trace(trace: &SimulationTrace) -> Self {
        let c = &trace.config;
        let f0 = &trace.frames[0];
        TraceHeader {
            version: VERSION,
            height: f0.height as u32,
            width: f0.width as u32,
            t_len: trace.frames.len() as u32,
            s_level_centi: fixed(c.s_level, 100.0),
            density_micro: fixed(c.density, 1e6),
            master_seed: c.master_seed,
            sim_index: trace.sim_index,
            alpha_micro: fixed(c.alpha, 1e6),
            q_threshold: c.q_threshold,
            i_seed: c.i_seed,
            q_die: c.q_die,
            q_dead: c.q_dead,
        }
    }

    /// Same run configuration, ignoring the simulation index.
    pub fn same_config(&self, other: &TraceHeader) -> bool {
        TraceHeader { sim_index: 0, ..*self } == TraceHeader { sim_index: 0, ..*other }
    }

    /// Configuration recoverable from the header; fields not stored keep
    /// their defaults.
    pub fn config(&self) -> SimConfig {
        SimConfig {
            height: self.height,
            width: self.width,
            density: f64::from(self.density_micro) / 1e6,
            s_level: f64::from(self.s_level_centi) / 100.0,
            q_threshold: self.q_threshold,
            i_seed: self.i_seed,
            q_die: self.q_die,
            q_dead: self.q_dead,
            alpha: f64::from(self.alpha_micro) / 1e6,
            master_seed: self.master_seed,
            ..SimConfig::default()
        }
    }
}

pub fn encode(trace: &SimulationTrace) -> Vec<u8> {
    let h = TraceHeader::for_trace(trace);
    let cells = (h.height * h.width) as usize;
    let mut out = Vec::with_capacity(HEADER_LEN + cells * trace.frames.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&h.version.to_le_bytes());
    for v in [h.height, h.width, h.t_len, h.s_level_centi, h.density_micro] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&h.master_seed.to_le_bytes());
    out.extend_from_slice(&h.sim_index.to_le_bytes());
    out.extend_from_slice(&h.alpha_micro.to_le_bytes());
    for v in [h.q_threshold, h.i_seed, h.q_die, h.q_dead] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for frame in &trace.frames {
        out.extend(frame.as_bytes());
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<(TraceHeader, SimulationTrace)> {
    let mut r = Reader::new(bytes, path);
    r.expect_magic(MAGIC)?;
    let version = r.u16()?;
    if version != VERSION {
        return Err(format_err(path, format!("unsupported FFCA version {version}")));
    }
    let header = TraceHeader {
        version,
        height: r.u32()?,
        width: r.u32()?,
        t_len: r.u32()?,
        s_level_centi: r.u32()?,
        density_micro: r.u32()?,
        master_seed: r.u64()?,
        sim_index: r.u32()?,
        alpha_micro: r.u32()?,
        q_threshold: r.f64()?,
        i_seed: r.f64()?,
        q_die: r.f64()?,
        q_dead: r.f64()?,
    };
    let (h, w) = (header.height as usize, header.width as usize);
    if h == 0 || w == 0 || header.t_len == 0 {
        return Err(format_err(path, "empty grid or trace"));
    }
    let mut frames = Vec::with_capacity(header.t_len as usize);
    for t in 0..header.t_len {
        let raw = r.take(h * w)?;
        let cells = raw
            .iter()
            .map(|&b| CellState::from_byte(b).ok_or_else(|| format_err(path, format!("invalid state byte {b} in frame {t}"))))
            .collect::<Result<Vec<_>>>()?;
        frames.push(StateGrid { height: h, width: w, cells });
    }
    r.finish()?;
    let trace = SimulationTrace { config: header.config(), sim_index: header.sim_index, frames, terminated_at: None };
    Ok((header, trace))
}

pub fn write(path: &Path, trace: &SimulationTrace) -> Result<()> {
    fs::write(path, encode(trace))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<(TraceHeader, SimulationTrace)> {
    decode(&fs::read(path)?, path)
}

pub fn file_name(sim_index: u32) -> String {
    format!("trace_{sim_index:06}.{EXTENSION}")
}

/// Lists the `.ffca` files of a directory in name order.
pub fn list_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == EXTENSION))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Loads every trace of a directory, ordered by `sim_index`. All files must
/// share one configuration.
pub fn read_dir(dir: &Path) -> Result<Vec<SimulationTrace>> {
    let paths = list_dir(dir)?;
    if paths.is_empty() {
        return Err(Error::input(format!("no .{EXTENSION} traces in {}", dir.display())));
    }
    let mut first: Option<(PathBuf, TraceHeader)> = None;
    let mut traces = Vec::with_capacity(paths.len());
    for path in paths {
        let (header, trace) = read(&path)?;
        match &first {
            None => first = Some((path.clone(), header)),
            Some((p0, h0)) if !h0.same_config(&header) => {
                return Err(Error::input(format!(
                    "mixed configurations: {} and {} differ in their headers",
                    p0.display(),
                    path.display()
                )));
            }
            Some(_) => {}
        }
        traces.push(trace);
    }
    traces.sort_by_key(|t| t.sim_index);
    Ok(traces)
}
