//! Forecasts and sentiments.
//!
//! Two conventions are in play:
//!
//! * directional: firm `i` moving along `v_i` forecasts `v_iᵀ ξ_i`, and its
//!   sentiment is `v_iᵀ S_ii v_i`; the aggregate sentiment is `vᵀ J v`.
//! * flow: under `dw/dt = ξ_η`, firm `i`'s forecast is `½‖ξ_i‖²`, the
//!   weighted forecast is `f_η = Σ_i η_i · ½‖ξ_i‖²` (so that
//!   `∇f_η = Jᵀ ξ_η`), per-firm sentiment is `η_i² ξ_iᵀ S_ii ξ_i` and the
//!   aggregate sentiment is `ξ_ηᵀ Jᵀ ξ_η = df_η/dt`.
//!
//! In a smooth market the per-firm sentiments add up to the aggregate; the
//! ledger records the residual so the failure in general games is visible.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::calculus::{jacobian, mixed_second_derivative, JacobianReport, DEFAULT_FD_STEP};
use crate::error::{Error, Result};
use crate::game::GameDefinition;
use crate::partition::LearningRates;

/// Flow-convention forecast bookkeeping at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastLedger {
    /// `½‖ξ_i‖²`.
    pub per_player_forecast: Vec<f64>,
    /// `f_η = Σ_i η_i ½‖ξ_i‖²`.
    pub weighted_forecast: f64,
    /// Ceteris-paribus sentiment `η_i² ξ_iᵀ S_ii ξ_i`.
    pub per_player_sentiment: Vec<f64>,
    /// `d(η_i ½‖ξ_i‖²)/dt` along the full flow, `(ξ_η)_iᵀ (J ξ_η)_i`.
    /// Sums to the aggregate in every game; differs from the ceteris-paribus
    /// column per player.
    pub per_player_flow_sentiment: Vec<f64>,
    /// `ξ_ηᵀ Jᵀ ξ_η`.
    pub aggregate_sentiment: f64,
    /// Central difference of `f_η` along the flow direction.
    pub flow_sentiment_fd: f64,
    /// `|aggregate − Σ per_player_sentiment|`.
    pub additivity_residual: f64,
}

impl ForecastLedger {
    pub fn sentiment_sum(&self) -> f64 {
        self.per_player_sentiment.iter().sum()
    }

    /// `|aggregate_sentiment − flow_sentiment_fd|`.
    pub fn flow_check_residual(&self) -> f64 {
        (self.aggregate_sentiment - self.flow_sentiment_fd).abs()
    }
}

/// `f_η(w) = Σ_i η_i ½‖ξ_i(w)‖²`.
pub fn weighted_forecast(game: &GameDefinition, w: &[f64], rates: &LearningRates) -> Result<f64> {
    let xi = game.weighted_gradient(w, rates)?;
    Ok(weighted_forecast_from(game, &xi, rates))
}

// ξ_η slice i is η_i ξ_i, so η_i ½‖ξ_i‖² = ½‖ξ_η,i‖² / η_i.
fn weighted_forecast_from(game: &GameDefinition, xi_eta: &[f64], rates: &LearningRates) -> f64 {
    let p = game.partition();
    (0..p.players())
        .map(|i| 0.5 * sq_norm(p.slice(xi_eta, i)) / rates.get(i))
        .sum()
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn forecast_ledger(game: &GameDefinition, w: &[f64], rates: &LearningRates) -> Result<ForecastLedger> {
    let report = jacobian(game, w, DEFAULT_FD_STEP)?;
    forecast_ledger_with(game, w, rates, &report)
}

/// Ledger from a precomputed Jacobian at `w`.
pub fn forecast_ledger_with(
    game: &GameDefinition,
    w: &[f64],
    rates: &LearningRates,
    report: &JacobianReport,
) -> Result<ForecastLedger> {
    let p = game.partition();
    let xi = game.simultaneous_gradient(w)?;
    rates.check(p)?;
    let mut xi_eta = xi.clone();
    crate::game::scale_by_player(p, rates, &mut xi_eta);

    let xi_eta_v = DVector::from_column_slice(&xi_eta);
    let j_xi_eta = &report.jacobian * &xi_eta_v;

    let n = p.players();
    let mut per_player_forecast = Vec::with_capacity(n);
    let mut per_player_sentiment = Vec::with_capacity(n);
    let mut per_player_flow_sentiment = Vec::with_capacity(n);
    for i in 0..n {
        let xi_i = p.slice(&xi, i);
        let eta = rates.get(i);
        per_player_forecast.push(0.5 * sq_norm(xi_i));
        let v = DVector::from_column_slice(xi_i);
        per_player_sentiment.push(eta * eta * v.dot(&(report.symmetric_block(i, i) * &v)));
        let flow: f64 = p.range(i).map(|k| xi_eta[k] * j_xi_eta[k]).sum();
        per_player_flow_sentiment.push(flow);
    }

    let aggregate_sentiment = xi_eta_v.dot(&j_xi_eta);
    let weighted = weighted_forecast_from(game, &xi_eta, rates);

    // Keep the probe displacement at most DEFAULT_FD_STEP in every coordinate.
    let scale = xi_eta.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let h = DEFAULT_FD_STEP / scale;
    let shifted = |s: f64| -> Result<f64> {
        let probe: Vec<f64> = w.iter().zip(&xi_eta).map(|(a, b)| a + s * b).collect();
        weighted_forecast(game, &probe, rates)
    };
    let flow_sentiment_fd = (shifted(h)? - shifted(-h)?) / (2.0 * h);

    let sum: f64 = per_player_sentiment.iter().sum();
    Ok(ForecastLedger {
        per_player_forecast,
        weighted_forecast: weighted,
        per_player_sentiment,
        per_player_flow_sentiment,
        aggregate_sentiment,
        flow_sentiment_fd,
        additivity_residual: (aggregate_sentiment - sum).abs(),
    })
}

/// Directional-convention forecasts for a joint update `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalForecast {
    pub direction: Vec<f64>,
    /// `v_iᵀ ξ_i`.
    pub per_player_value: Vec<f64>,
    /// `Σ_i v_iᵀ ξ_i`.
    pub aggregate_value: f64,
    /// `v_iᵀ S_ii v_i`.
    pub per_player_sentiment: Vec<f64>,
    /// `vᵀ J v`.
    pub aggregate_sentiment: f64,
}

pub fn directional_forecast(game: &GameDefinition, w: &[f64], v: &[f64]) -> Result<DirectionalForecast> {
    let p = game.partition();
    p.check(v)?;
    let xi = game.simultaneous_gradient(w)?;
    let report = jacobian(game, w, DEFAULT_FD_STEP)?;
    let per_player_value: Vec<f64> = (0..p.players())
        .map(|i| p.slice(v, i).iter().zip(p.slice(&xi, i)).map(|(a, b)| a * b).sum())
        .collect();
    Ok(DirectionalForecast {
        direction: v.to_vec(),
        aggregate_value: per_player_value.iter().sum(),
        per_player_value,
        per_player_sentiment: report.block_quadratic_forms(v),
        aggregate_sentiment: report.quadratic_form(v),
    })
}

/// Split of the aggregate sentiment of a near-SM game into the legible
/// block part and the valuation-mismatch corrections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearSmSplit {
    /// `Σ_i η_i² ξ_iᵀ S_ii ξ_i`.
    pub block_sum: f64,
    /// `Σ_{i<j} η_i η_j (α_ij − α_ji) ξ_iᵀ ∇²_ij ω_ij ξ_j`.
    pub correction_sum: f64,
    /// `ξ_ηᵀ Jᵀ ξ_η`.
    pub total: f64,
}

impl NearSmSplit {
    pub fn residual(&self) -> f64 {
        (self.total - self.block_sum - self.correction_sum).abs()
    }
}

pub fn near_sm_sentiment_split(game: &GameDefinition, w: &[f64], rates: &LearningRates) -> Result<NearSmSplit> {
    if !game.couplings().iter().any(|c| c.goods().is_some()) {
        return Err(Error::Unsupported(format!(
            "game '{}' exchanges no goods; the split needs valuation data",
            game.name()
        )));
    }
    let ledger = forecast_ledger(game, w, rates)?;
    let p = game.partition();
    let xi = game.simultaneous_gradient(w)?;
    let mut correction_sum = 0.0;
    for c in game.couplings() {
        let Some(goods) = c.goods() else { continue };
        let (i, j) = c.players();
        let (a_ij, a_ji) = goods.valuation;
        let b = mixed_second_derivative(
            |x, y| goods.value.grad_first(x, y),
            p.slice(w, i),
            p.slice(w, j),
            DEFAULT_FD_STEP,
        );
        let xi_i = DVector::from_column_slice(p.slice(&xi, i));
        let xi_j = DVector::from_column_slice(p.slice(&xi, j));
        correction_sum += rates.get(i) * rates.get(j) * (a_ij - a_ji) * xi_i.dot(&(b * xi_j));
    }
    Ok(NearSmSplit {
        block_sum: ledger.sentiment_sum(),
        correction_sum,
        total: ledger.aggregate_sentiment,
    })
}
