//! Sentiment sign over a regular grid in two-dimensional games.

use serde::{Deserialize, Serialize};

use crate::calculus::{jacobian, DEFAULT_FD_STEP};
use crate::error::{Error, Result};
use crate::forecasting::forecast_ledger_with;
use crate::game::GameDefinition;
use crate::partition::LearningRates;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    /// Nodes per axis, including both endpoints.
    pub resolution: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        let g = Self { lo, hi, resolution };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::invalid(format!("grid bounds [{}, {}] are not an interval", self.lo, self.hi)));
        }
        if self.resolution < 2 {
            return Err(Error::invalid("grid resolution must be at least 2"));
        }
        Ok(())
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        if k + 1 == self.resolution {
            self.hi
        } else {
            self.lo + k as f64 * (self.hi - self.lo) / (self.resolution - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseNode {
    pub w: [f64; 2],
    pub xi_eta: [f64; 2],
    pub f_eta: f64,
    /// Aggregate sentiment `ξ_ηᵀ Jᵀ ξ_η`.
    pub sentiment: f64,
    /// −1, 0 or +1.
    pub sign: i8,
}

/// Nodes ordered with the first coordinate in the outer loop.
pub fn phase_grid(game: &GameDefinition, rates: &LearningRates, grid: &GridSpec) -> Result<Vec<PhaseNode>> {
    if game.dim() != 2 {
        return Err(Error::Unsupported(format!("phase grid needs a 2-dimensional game, got {}", game.dim())));
    }
    grid.check()?;
    let mut nodes = Vec::with_capacity(grid.resolution * grid.resolution);
    for a in 0..grid.resolution {
        for b in 0..grid.resolution {
            let w = [grid.coordinate(a), grid.coordinate(b)];
            let report = jacobian(game, &w, DEFAULT_FD_STEP)?;
            let ledger = forecast_ledger_with(game, &w, rates, &report)?;
            let xi = game.weighted_gradient(&w, rates)?;
            let s = ledger.aggregate_sentiment;
            nodes.push(PhaseNode {
                w,
                xi_eta: [xi[0], xi[1]],
                f_eta: ledger.weighted_forecast,
                sentiment: s,
                sign: if s > 0.0 {
                    1
                } else if s < 0.0 {
                    -1
                } else {
                    0
                },
            });
        }
    }
    Ok(nodes)
}
