//! Grid containers shared by the engine, ensembles and metrics.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellState {
    NoTree = 0,
    Tree = 1,
    Fire = 2,
    Ember = 3,
    Dead = 4,
}

impl CellState {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => CellState::NoTree,
            1 => CellState::Tree,
            2 => CellState::Fire,
            3 => CellState::Ember,
            4 => CellState::Dead,
            _ => return None,
        })
    }

    /// Whether the cell has ever ignited.
    pub fn is_burnt(self) -> bool {
        matches!(self, CellState::Fire | CellState::Ember | CellState::Dead)
    }

    /// The per-step transition relation of the automaton (self-loops included).
    pub fn can_become(self, next: CellState) -> bool {
        use CellState::*;
        matches!(
            (self, next),
            (NoTree, NoTree) | (Tree, Tree) | (Tree, Fire) | (Fire, Ember) | (Ember, Ember) | (Ember, Dead) | (Dead, Dead)
        )
    }
}

/// Row-major `height x width` grid of cell states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGrid {
    pub height: usize,
    pub width: usize,
    pub cells: Vec<CellState>,
}

impl StateGrid {
    pub fn filled(height: usize, width: usize, state: CellState) -> Self {
        StateGrid { height, width, cells: vec![state; height * width] }
    }

    pub fn get(&self, row: usize, col: usize) -> CellState {
        self.cells[row * self.width + col]
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    pub fn burnt_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_burnt()).count()
    }

    pub fn burnt_mask(&self) -> BinaryGrid {
        BinaryGrid {
            height: self.height,
            width: self.width,
            cells: self.cells.iter().map(|c| c.is_burnt()).collect(),
        }
    }

    pub fn as_bytes(&self) -> impl Iterator<Item = u8> + '_ {
        self.cells.iter().map(|&c| c as u8)
    }
}

/// Live automaton state for one timestep: states plus heat.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFrame {
    pub t: u32,
    pub states: StateGrid,
    pub heat: Vec<f64>,
}

impl GridFrame {
    pub fn height(&self) -> usize {
        self.states.height
    }

    pub fn width(&self) -> usize {
        self.states.width
    }

    pub fn heat_at(&self, row: usize, col: usize) -> f64 {
        self.heat[row * self.width() + col]
    }

    pub fn state_at(&self, row: usize, col: usize) -> CellState {
        self.states.get(row, col)
    }
}

/// Binary `height x width` mask (burnt masks, thresholded forecasts).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGrid {
    pub height: usize,
    pub width: usize,
    pub cells: Vec<bool>,
}

impl BinaryGrid {
    pub fn from_cells(height: usize, width: usize, cells: Vec<bool>) -> Self {
        assert_eq!(cells.len(), height * width, "mask size mismatch");
        BinaryGrid { height, width, cells }
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn same_shape(&self, other: &BinaryGrid) -> bool {
        self.height == other.height && self.width == other.width
    }
}
