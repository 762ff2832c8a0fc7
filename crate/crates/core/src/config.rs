//! Simulation configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version of the JSON configuration schema, recorded in run manifests.
pub const CONFIG_VERSION: u16 = 1;

/// Where fire seeds are placed on the initial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedPlacement {
    /// Uniformly random Tree cells drawn from the layout stream.
    Random,
    /// Explicit `[row, col]` coordinates; each must land on a Tree cell.
    Fixed { cells: Vec<[u32; 2]> },
}

/// When a tree above the ignition threshold draws its ignition trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IgnitionRule {
    /// One trial per step in which a burning neighbour heats the tree (seeds
    /// draw on the first step). A failed tree keeps its heat, so a later
    /// exposure tries again with more heat; without one the tree survives.
    #[default]
    OnExposure,
    /// A trial on every step while above threshold, burning or not.
    Persistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub height: u32,
    pub width: u32,
    /// Probability that a cell starts as a tree.
    pub density: f64,
    /// Stochasticity level in percent: `(1 - p_ignite) * 100`.
    pub s_level: f64,
    pub q_threshold: f64,
    /// Seed heat multiplier; seeds start with `i_seed * q_threshold`.
    pub i_seed: f64,
    /// Heat an ember radiates to each adjacent cell per step.
    pub q_die: f64,
    /// Embers whose heat falls below this become dead.
    pub q_dead: f64,
    /// Fraction of a burning neighbour's heat transferred per step.
    pub alpha: f64,
    /// Moore neighbourhood radius for heat accumulation.
    pub radius: u32,
    pub ignition_rule: IgnitionRule,
    pub max_steps: u32,
    pub n_seeds: u32,
    pub seed_placement: SeedPlacement,
    pub master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            height: 64,
            width: 64,
            density: 0.44,
            s_level: 0.0,
            q_threshold: 1.0,
            i_seed: 2.0,
            q_die: 0.1,
            q_dead: 0.05,
            alpha: 1.0,
            radius: 1,
            ignition_rule: IgnitionRule::OnExposure,
            max_steps: 200,
            n_seeds: 1,
            seed_placement: SeedPlacement::Random,
            master_seed: 14,
        }
    }
}

impl SimConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(s).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Per-step ignition probability for a tree above threshold.
    pub fn p_ignite(&self) -> f64 {
        1.0 - self.s_level / 100.0
    }

    pub fn cells(&self) -> usize {
        self.height as usize * self.width as usize
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be finite, got {v}")))
            }
        };
        for (name, v) in [
            ("density", self.density),
            ("s_level", self.s_level),
            ("q_threshold", self.q_threshold),
            ("i_seed", self.i_seed),
            ("q_die", self.q_die),
            ("q_dead", self.q_dead),
            ("alpha", self.alpha),
        ] {
            finite(name, v)?;
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::config("grid dimensions must be positive"));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::config(format!("density must lie in [0, 1], got {}", self.density)));
        }
        if !(0.0..=100.0).contains(&self.s_level) {
            return Err(Error::config(format!("s_level must lie in [0, 100], got {}", self.s_level)));
        }
        if self.q_threshold <= 0.0 {
            return Err(Error::config("q_threshold must be > 0"));
        }
        if self.i_seed < 0.0 {
            return Err(Error::config("i_seed must be >= 0"));
        }
        if self.q_die < 0.0 || self.q_dead < 0.0 {
            return Err(Error::config("q_die and q_dead must be >= 0"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.radius == 0 {
            return Err(Error::config("radius must be >= 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be >= 1"));
        }
        if let SeedPlacement::Fixed { cells } = &self.seed_placement {
            if self.n_seeds != 0 && cells.len() != self.n_seeds as usize {
                return Err(Error::config(format!(
                    "fixed placement lists {} cells but n_seeds = {}",
                    cells.len(),
                    self.n_seeds
                )));
            }
            for &[r, c] in cells {
                if r >= self.height || c >= self.width {
                    return Err(Error::config(format!("seed ({r}, {c}) is outside the grid")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimConfig::default().validate().unwrap();
        assert_eq!(SimConfig::default().p_ignite(), 1.0);
    }

    #[test]
    fn json_round_trip_uses_stable_keys() {
        let cfg = SimConfig {
            s_level: 20.0,
            seed_placement: SeedPlacement::Fixed { cells: vec![[32, 32]] },
            ..SimConfig::default()
        };
        let json = cfg.to_json_pretty();
        for key in [
            "height", "width", "density", "s_level", "q_threshold", "i_seed", "q_die", "q_dead", "alpha",
            "radius", "ignition_rule", "max_steps", "n_seeds", "seed_placement", "master_seed",
        ] {
            assert!(json.contains(&format!("\"{key}\"")), "missing {key}");
        }
        assert_eq!(SimConfig::from_json_str(&json).unwrap(), cfg);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = SimConfig::from_json_str(r#"{"s_level": 5, "master_seed": 9}"#).unwrap();
        assert_eq!(cfg.s_level, 5.0);
        assert_eq!(cfg.master_seed, 9);
        assert_eq!(cfg.height, 64);
    }

    #[test]
    fn rejects_out_of_range_values() {
        for json in [
            r#"{"density": 1.5}"#,
            r#"{"density": -0.1}"#,
            r#"{"s_level": 101}"#,
            r#"{"q_threshold": 0}"#,
            r#"{"max_steps": 0}"#,
            r#"{"alpha": 0}"#,
            r#"{"unknown_key": 1}"#,
            r#"{"n_seeds": 1, "seed_placement": {"kind": "fixed", "cells": [[64, 0]]}}"#,
        ] {
            assert!(matches!(SimConfig::from_json_str(json), Err(Error::Config(_))), "{json}");
        }
    }
}
