use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Splits the joint parameter vector `w` into per-player slices `w_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterPartition {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl ParameterPartition {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("a game needs at least one player"));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::invalid(format!("player {i} has zero parameters")));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for &d in dims {
            offsets.push(total);
            total += d;
        }
        Ok(Self {
            dims: dims.to_vec(),
            offsets,
            total,
        })
    }

    /// `n` scalar players, one coordinate each.
    pub fn scalar_players(n: usize) -> Result<Self> {
        Self::new(&vec![1; n])
    }

    pub fn players(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, player: usize) -> usize {
        self.dims[player]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn range(&self, player: usize) -> std::ops::Range<usize> {
        let start = self.offsets[player];
        start..start + self.dims[player]
    }

    pub fn slice<'a>(&self, w: &'a [f64], player: usize) -> &'a [f64] {
        &w[self.range(player)]
    }

    /// Player owning joint coordinate `k`.
    pub fn owner(&self, k: usize) -> usize {
        match self.offsets.binary_search(&k) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    pub fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.total {
            return Err(Error::Dimension {
                expected: self.total,
                got: w.len(),
            });
        }
        Ok(())
    }
}

/// Per-player learning rates `η ≻ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningRates(Vec<f64>);

impl LearningRates {
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::invalid("learning rates must not be empty"));
        }
        if let Some(i) = eta.iter().position(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::invalid(format!(
                "learning rate of player {i} must be positive and finite, got {}",
                eta[i]
            )));
        }
        Ok(Self(eta))
    }

    pub fn unit(players: usize) -> Self {
        Self(vec![1.0; players])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, player: usize) -> f64 {
        self.0[player]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn check(&self, partition: &ParameterPartition) -> Result<()> {
        if self.0.len() != partition.players() {
            return Err(Error::invalid(format!(
                "{} learning rates given for {} players",
                self.0.len(),
                partition.players()
            )));
        }
        Ok(())
    }
}
