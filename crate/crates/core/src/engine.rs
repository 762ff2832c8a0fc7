//! The stochastic forest-fire automaton.
//!
//! Each step is a synchronous update computed entirely from the time-`t`
//! snapshot:
//!
//! 1. every `Tree` gains `alpha * q` from each `Fire` cell within Chebyshev
//!    distance `radius`;
//! 2. every `Ember` holding at least `q_dead` radiates `q_die` to each
//!    adjacent non-fire cell (only trees keep the heat) and pays `q_die` per
//!    recipient; an ember left below `q_dead` turns `Dead`;
//! 3. every `Tree` whose heat now exceeds `q_threshold` and that is eligible
//!    under the configured [`IgnitionRule`] ignites with probability
//!    `p_ignite`; draws are taken in row-major order and a tree that fails
//!    keeps its heat;
//! 4. every `Fire` becomes `Ember`, keeping its heat.
//!
//! Grid edges do not wrap.

use rand::Rng;

use crate::config::{IgnitionRule, SeedPlacement, SimConfig};
use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, CellState, GridFrame, StateGrid};
use crate::rng::{substream, SimRng, LAYOUT_STREAM};

/// One Monte-Carlo realization. Heat is not retained past the live frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub config: SimConfig,
    pub sim_index: u32,
    pub frames: Vec<StateGrid>,
    pub terminated_at: Option<u32>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn initial_tree_count(&self) -> usize {
        self.frames[0].cells.iter().filter(|&&c| c != CellState::NoTree).count()
    }

    /// Truncates or pads (by repeating the last frame) to exactly `len` frames.
    pub fn fit_to_length(&mut self, len: usize) {
        assert!(len >= 1, "trace length must be positive");
        if self.frames.len() >= len {
            self.frames.truncate(len);
        } else {
            let last = self.frames.last().expect("trace has a frame").clone();
            self.frames.resize(len, last);
        }
    }

    pub fn burnt_counts(&self) -> Vec<usize> {
        self.frames.iter().map(StateGrid::burnt_count).collect()
    }
}

pub fn init_grid(config: &SimConfig, rng: &mut SimRng) -> Result<GridFrame> {
    config.validate()?;
    let (h, w) = (config.height as usize, config.width as usize);
    let cells = (0..h * w)
        .map(|_| if rng.random::<f64>() < config.density { CellState::Tree } else { CellState::NoTree })
        .collect();
    Ok(GridFrame { t: 0, states: StateGrid { height: h, width: w, cells }, heat: vec![0.0; h * w] })
}

pub fn seed_fire(mut frame: GridFrame, config: &SimConfig, rng: &mut SimRng) -> Result<GridFrame> {
    if frame.t != 0 {
        return Err(Error::Seeding(format!("seeding requires a t = 0 frame, got t = {}", frame.t)));
    }
    let n = config.n_seeds as usize;
    if n == 0 {
        return Ok(frame);
    }
    let w = frame.width();
    let seed_heat = config.i_seed * config.q_threshold;
    let targets: Vec<usize> = match &config.seed_placement {
        SeedPlacement::Fixed { cells } => {
            let mut idx = Vec::with_capacity(cells.len());
            for &[r, c] in cells {
                let (r, c) = (r as usize, c as usize);
                if r >= frame.height() || c >= w {
                    return Err(Error::Seeding(format!("seed ({r}, {c}) is outside the grid")));
                }
                if frame.states.get(r, c) != CellState::Tree {
                    return Err(Error::Seeding(format!("seed ({r}, {c}) is not a tree cell")));
                }
                if idx.contains(&(r * w + c)) {
                    return Err(Error::Seeding(format!("seed ({r}, {c}) listed twice")));
                }
                idx.push(r * w + c);
            }
            idx
        }
        SeedPlacement::Random => {
            let total = frame.states.cells.len();
            let budget = 100 * total.max(n);
            let mut idx: Vec<usize> = Vec::with_capacity(n);
            let mut attempts = 0;
            while idx.len() < n {
                if attempts == budget {
                    return Err(Error::Seeding(format!(
                        "placed {} of {n} seeds after {budget} attempts; not enough tree cells",
                        idx.len()
                    )));
                }
                attempts += 1;
                let i = rng.random_range(0..total);
                if frame.states.cells[i] == CellState::Tree && !idx.contains(&i) {
                    idx.push(i);
                }
            }
            idx
        }
    };
    for i in targets {
        frame.heat[i] = seed_heat;
    }
    Ok(frame)
}

fn neighbours(row: usize, col: usize, radius: usize, h: usize, w: usize) -> impl Iterator<Item = usize> {
    let r0 = row.saturating_sub(radius);
    let r1 = (row + radius).min(h - 1);
    let c0 = col.saturating_sub(radius);
    let c1 = (col + radius).min(w - 1);
    (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| (r, c))).filter(move |&(r, c)| (r, c) != (row, col)).map(move |(r, c)| r * w + c)
}

/// One synchronous update of the automaton.
pub fn step(frame: &GridFrame, config: &SimConfig, rng: &mut SimRng) -> GridFrame {
    let (h, w) = (frame.height(), frame.width());
    let radius = config.radius as usize;
    let states = &frame.states.cells;
    let mut next_states = states.clone();
    let mut next_heat = frame.heat.clone();
    let mut exposed = vec![frame.t == 0; states.len()];

    // Heat accumulation from burning neighbours. Scattering from each fire
    // cell in row-major order fixes the floating-point summation order.
    for (i, _) in states.iter().enumerate().filter(|(_, &s)| s == CellState::Fire) {
        let transfer = config.alpha * frame.heat[i];
        for j in neighbours(i / w, i % w, radius, h, w) {
            if states[j] == CellState::Tree {
                next_heat[j] += transfer;
                exposed[j] = true;
            }
        }
    }

    // Ember radiation and extinction.
    for (i, _) in states.iter().enumerate().filter(|(_, &s)| s == CellState::Ember) {
        if frame.heat[i] >= config.q_dead {
            let mut recipients = 0u32;
            for j in neighbours(i / w, i % w, 1, h, w) {
                match states[j] {
                    CellState::Fire => {}
                    CellState::Tree => {
                        next_heat[j] += config.q_die;
                        recipients += 1;
                    }
                    _ => recipients += 1,
                }
            }
            next_heat[i] -= config.q_die * f64::from(recipients);
        }
        if next_heat[i] < config.q_dead {
            next_heat[i] = next_heat[i].max(0.0);
            next_states[i] = CellState::Dead;
        }
    }

    // Ignition.
    let p = config.p_ignite();
    let persistent = config.ignition_rule == IgnitionRule::Persistent;
    for i in 0..states.len() {
        if states[i] == CellState::Tree && next_heat[i] > config.q_threshold && (exposed[i] || persistent) {
            let ignites = if p >= 1.0 {
                true
            } else if p <= 0.0 {
                false
            } else {
                rng.random::<f64>() < p
            };
            if ignites {
                next_states[i] = CellState::Fire;
            }
        }
    }

    for (next, &s) in next_states.iter_mut().zip(states) {
        if s == CellState::Fire {
            *next = CellState::Ember;
        }
    }

    GridFrame { t: frame.t + 1, states: StateGrid { height: h, width: w, cells: next_states }, heat: next_heat }
}

/// True when no further state change is possible: nothing burns, no ember
/// can still radiate, and no tree is waiting on an ignition draw.
pub fn is_quiescent(frame: &GridFrame, config: &SimConfig) -> bool {
    let can_draw = config.p_ignite() > 0.0
        && (frame.t == 0 || config.ignition_rule == IgnitionRule::Persistent);
    frame.states.cells.iter().zip(&frame.heat).all(|(&s, &q)| match s {
        CellState::Fire => false,
        CellState::Ember => q < config.q_dead,
        CellState::Tree => !(can_draw && q > config.q_threshold),
        _ => true,
    })
}

/// Builds the shared initial condition (layout + seeds) for `config.master_seed`.
pub fn initial_condition(config: &SimConfig) -> Result<GridFrame> {
    let mut rng = substream(config.master_seed, LAYOUT_STREAM);
    let frame = init_grid(config, &mut rng)?;
    seed_fire(frame, config, &mut rng)
}

/// Runs one realization from a prepared initial frame, recording at most
/// `frame_limit` frames (including the initial one).
pub fn run_from(initial: &GridFrame, config: &SimConfig, sim_index: u32, frame_limit: usize) -> SimulationTrace {
    let mut rng = substream(config.master_seed, u64::from(sim_index));
    let mut frames = vec![initial.states.clone()];
    let mut current = initial.clone();
    let mut terminated_at = None;
    loop {
        if is_quiescent(&current, config) {
            terminated_at = Some(current.t);
            break;
        }
        if frames.len() >= frame_limit {
            break;
        }
        current = step(&current, config, &mut rng);
        frames.push(current.states.clone());
    }
    SimulationTrace { config: config.clone(), sim_index, frames, terminated_at }
}

/// Runs realization `sim_index` to termination or `max_steps` frames.
pub fn run_simulation(config: &SimConfig, sim_index: u32) -> Result<SimulationTrace> {
    let initial = initial_condition(config)?;
    Ok(run_from(&initial, config, sim_index, config.max_steps as usize))
}

pub fn burnt_mask(frame: &GridFrame) -> BinaryGrid {
    frame.states.burnt_mask()
}
