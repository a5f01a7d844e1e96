use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calculus::{jacobian, DEFAULT_FD_STEP};
use crate::error::{Error, Result};
use crate::game::GameDefinition;
use crate::partition::LearningRates;

/// Outcome of sampling per-firm sentiment on the shell `‖w_i‖ = radius`
/// for all players. A `true` verdict is evidence at one radius, not a proof
/// of boundedness, and says nothing for games that are not smooth markets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessVerdict {
    pub negative_sentiment_on_shell: bool,
    /// Largest per-firm sentiment `η_i² ξ_iᵀ S_ii ξ_i` observed.
    pub worst_value: f64,
    pub radius: f64,
    pub samples: usize,
}

pub fn boundedness_probe(
    game: &GameDefinition,
    radius: f64,
    shell_samples: usize,
    rates: &LearningRates,
    seed: u64,
) -> Result<BoundednessVerdict> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    if shell_samples == 0 {
        return Err(Error::invalid("at least one shell sample is required"));
    }
    if rates.len() != game.players() {
        return Err(Error::invalid(format!("{} learning rates for {} players", rates.len(), game.players())));
    }
    let p = game.partition();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut w = vec![0.0; p.total_dim()];
    for _ in 0..shell_samples {
        for i in 0..p.players() {
            let slot = &mut w[p.range(i)];
            loop {
                for x in slot.iter_mut() {
                    *x = StandardNormal.sample(&mut rng);
                }
                let n = slot.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-12 {
                    slot.iter_mut().for_each(|x| *x *= radius / n);
                    break;
                }
            }
        }
        let xi = game.simultaneous_gradient(&w)?;
        let report = jacobian(game, &w, DEFAULT_FD_STEP)?;
        for i in 0..p.players() {
            let v = DVector::from_column_slice(p.slice(&xi, i));
            let eta = rates.get(i);
            worst = worst.max(eta * eta * v.dot(&(report.symmetric_block(i, i) * &v)));
        }
    }
    Ok(BoundednessVerdict {
        negative_sentiment_on_shell: worst < 0.0,
        worst_value: worst,
        radius,
        samples: shell_samples,
    })
}
