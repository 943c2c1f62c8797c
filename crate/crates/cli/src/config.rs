//! Run configuration: JSON on disk, every field optional with defaults set to
//! the standard packet and time window.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lyapunov_core::spectral::{ChannelState, EnergyGrid, Spacing};
use lyapunov_core::states::{exponential_profile, gaussian_packet, oracle_grid, GaussianPacketParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Smallest grid the CLI accepts.
pub const MIN_GRID_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Gaussian,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    Log,
    Linear,
}

impl From<GridSpacing> for Spacing {
    fn from(s: GridSpacing) -> Self {
        match s {
            GridSpacing::Log => Spacing::Logarithmic,
            GridSpacing::Linear => Spacing::Linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub mass: f64,
    pub p0: f64,
    pub xi0: f64,
    /// Lower grid edge; derived from the packet when absent.
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub n: usize,
    pub spacing: GridSpacing,
    pub t0: f64,
    pub t1: f64,
    pub count: usize,
    pub m_grid_size: usize,
    pub output: Option<PathBuf>,
    pub format: String,
    pub frame_times: Vec<f64>,
    pub couplings: Vec<f64>,
    pub overlap_time: f64,
    pub galapon_energies: Vec<f64>,
    pub galapon_window: [f64; 2],
}

impl Default for RunConfig {
    fn default() -> Self {
        let packet = GaussianPacketParams::default();
        Self {
            experiment: Experiment::Gaussian,
            mass: packet.mass,
            p0: packet.p0,
            xi0: packet.xi0,
            e_min: None,
            e_max: None,
            n: 4096,
            spacing: GridSpacing::Log,
            t0: -0.5,
            t1: 0.5,
            count: 201,
            m_grid_size: 1024,
            output: None,
            format: "csv".into(),
            frame_times: vec![-0.3, -0.05, 0.0, 0.05, 0.3],
            couplings: vec![0.0, 1.0, 2.0],
            overlap_time: -50.0,
            galapon_energies: vec![0.0, 1.0],
            galapon_window: [0.0, 2.0 * PI],
        }
    }
}

/// A validation failure tied to one config field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: &'static str,
    pub reason: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

fn reject(field: &'static str, reason: impl Into<String>) -> FieldError {
    FieldError {
        field,
        reason: reason.into(),
    }
}

fn finite(field: &'static str, v: f64) -> Result<(), FieldError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(reject(field, format!("must be finite, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config: cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn times(&self) -> Vec<f64> {
        window(self.t0, self.t1, self.count)
    }

    pub fn galapon_times(&self) -> Vec<f64> {
        window(self.galapon_window[0], self.galapon_window[1], self.count)
    }

    pub fn packet(&self) -> GaussianPacketParams {
        GaussianPacketParams {
            p0: self.p0,
            xi0: self.xi0,
            mass: self.mass,
        }
    }

    /// Field-level checks that need no grid.
    pub fn validate(&self) -> Result<(), FieldError> {
        finite("mass", self.mass)?;
        if self.mass <= 0.0 {
            return Err(reject("mass", "must be positive"));
        }
        finite("p0", self.p0)?;
        finite("xi0", self.xi0)?;
        if self.xi0 <= 0.0 {
            return Err(reject("xi0", "must be positive"));
        }
        if let Some(e) = self.e_min {
            finite("e_min", e)?;
            if e <= 0.0 {
                return Err(reject("e_min", "must be positive"));
            }
        }
        if let Some(e) = self.e_max {
            finite("e_max", e)?;
            if e <= self.e_min.unwrap_or(0.0) {
                return Err(reject("e_max", "must exceed e_min"));
            }
        }
        if self.n < MIN_GRID_NODES {
            return Err(reject("n", format!("need at least {MIN_GRID_NODES} nodes, got {}", self.n)));
        }
        finite("t0", self.t0)?;
        finite("t1", self.t1)?;
        if self.count > 1 && self.t1 <= self.t0 {
            return Err(reject("t1", "must exceed t0"));
        }
        if self.m_grid_size < 2 {
            return Err(reject("m_grid_size", "need at least two nodes"));
        }
        if self.format != "csv" {
            return Err(reject("format", format!("only \"csv\" is supported, got {:?}", self.format)));
        }
        for &t in &self.frame_times {
            finite("frame_times", t)?;
        }
        for &g in &self.couplings {
            finite("couplings", g)?;
            if g < 0.0 {
                return Err(reject("couplings", format!("must be non-negative, got {g}")));
            }
        }
        finite("overlap_time", self.overlap_time)?;
        if self.galapon_energies.len() < 2 {
            return Err(reject("galapon_energies", "need at least two levels"));
        }
        for (k, &e) in self.galapon_energies.iter().enumerate() {
            finite("galapon_energies", e)?;
            if self.galapon_energies[..k].contains(&e) {
                return Err(reject("galapon_energies", format!("energy {e} is repeated")));
            }
        }
        let [a, b] = self.galapon_window;
        finite("galapon_window", a)?;
        finite("galapon_window", b)?;
        if self.count > 1 && b <= a {
            return Err(reject("galapon_window", "end must exceed start"));
        }
        if self.experiment == Experiment::Gaussian {
            self.packet().validate().map_err(|e| reject("p0", e.to_string()))?;
        }
        Ok(())
    }

    /// Builds the grid and the initial state.
    pub fn resolve(&self) -> Result<Resolved, FieldError> {
        self.validate()?;
        let (default_lo, default_hi) = match self.experiment {
            Experiment::Gaussian => self.packet().default_bounds(),
            Experiment::Exponential => {
                let g = oracle_grid(MIN_GRID_NODES).map_err(|e| reject("n", e.to_string()))?;
                (g.e_min(), g.e_max())
            }
        };
        let lo = self.e_min.unwrap_or(default_lo);
        let hi = self.e_max.unwrap_or(default_hi);
        if hi <= lo {
            return Err(reject("e_max", format!("must exceed e_min = {lo}")));
        }
        let grid = EnergyGrid::new(lo, hi, self.n, self.spacing.into())
            .map_err(|e| reject("n", e.to_string()))?;
        let grid = Arc::new(grid);
        let state = match self.experiment {
            Experiment::Gaussian => gaussian_packet(&self.packet(), Arc::clone(&grid)),
            Experiment::Exponential => exponential_profile(Arc::clone(&grid)),
        }
        .map_err(|e| {
            let field = if self.e_min.is_some() && lo > default_lo { "e_min" } else { "e_max" };
            reject(field, e.to_string())
        })?;
        let mut config = self.clone();
        config.e_min = Some(lo);
        config.e_max = Some(hi);
        Ok(Resolved { config, state })
    }
}

/// A validated config with its grid bounds filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub state: ChannelState,
}

impl Resolved {
    pub fn grid(&self) -> &Arc<EnergyGrid> {
        self.state.grid()
    }
}

fn window(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..count)
            .map(|k| a + (b - a) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
        let empty: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(empty, c);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"p1": 3}"#).is_err());
    }

    #[test]
    fn errors_name_the_field() {
        let c = RunConfig {
            xi0: -1.0,
            ..RunConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "xi0");
        let c = RunConfig {
            n: 4,
            ..RunConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "n");
        let c = RunConfig {
            galapon_energies: vec![1.0, 1.0],
            ..RunConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "galapon_energies");
        let c = RunConfig {
            e_max: Some(10.0),
            ..RunConfig::default()
        };
        assert_eq!(c.resolve().unwrap_err().field, "e_max");
    }

    #[test]
    fn time_window() {
        let c = RunConfig::default();
        let t = c.times();
        assert_eq!(t.len(), 201);
        assert_eq!(t[0], -0.5);
        assert_eq!(t[200], 0.5);
        assert!((t[100]).abs() < 1e-15);
        assert!(window(0.0, 1.0, 0).is_empty());
    }

    #[test]
    fn resolve_fills_bounds() {
        let c = RunConfig {
            n: 256,
            experiment: Experiment::Exponential,
            ..RunConfig::default()
        };
        let r = c.resolve().unwrap();
        assert_eq!(r.config.e_min, Some(r.grid().e_min()));
        assert_eq!(r.grid().len(), 256);
    }
}
