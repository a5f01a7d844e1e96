use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::calculus::{jacobian, jacobian_fd, DEFAULT_FD_STEP};
use crate::error::{Error, Result};
use crate::game::GameDefinition;

/// Relative eigenvalue threshold separating definite from degenerate spectra.
pub const DEFAULT_EIG_TOL: f64 = 1e-7;
/// Largest `‖ξ(w*)‖∞` accepted by [`classify_fixed_point`].
pub const DEFAULT_RESIDUAL_BOUND: f64 = 1e-8;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    StableLocalNash,
    Unstable,
    SaddleOrIndefinite,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    NegativeDefinite,
    PositiveDefinite,
    Indefinite,
    Degenerate,
}

impl Definiteness {
    fn of_spectrum(eigs: &[f64], tau: f64) -> Self {
        if eigs.iter().any(|e| e.abs() <= tau) {
            Definiteness::Degenerate
        } else if eigs.iter().all(|&e| e < -tau) {
            Definiteness::NegativeDefinite
        } else if eigs.iter().all(|&e| e > tau) {
            Definiteness::PositiveDefinite
        } else {
            Definiteness::Indefinite
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub location: Vec<f64>,
    /// `‖ξ(w*)‖∞`.
    pub residual: f64,
    /// Spectrum of `S(w*)`, ascending.
    pub s_eigenvalues: Vec<f64>,
    pub classification: Classification,
    /// Relative eigenvalue tolerance as requested.
    pub tolerance: f64,
    /// Absolute threshold actually applied to eigenvalues.
    pub threshold: f64,
    /// Definiteness of each player's own block `S_ii`.
    pub block_definiteness: Vec<Definiteness>,
    /// Every `S_ii` is negative definite, i.e. the point is a local Nash
    /// equilibrium by the second-order test.
    pub blocks_negative_definite: bool,
    /// The full `S` is negative definite, i.e. the point is stable.
    pub full_negative_definite: bool,
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Classifies `w_star` by the spectrum of the symmetric part of the
/// Jacobian, using the default residual bound.
pub fn classify_fixed_point(game: &GameDefinition, w_star: &[f64], eig_tol: f64) -> Result<FixedPointReport> {
    classify_with_bound(game, w_star, eig_tol, DEFAULT_RESIDUAL_BOUND)
}

pub fn classify_with_bound(
    game: &GameDefinition,
    w_star: &[f64],
    eig_tol: f64,
    residual_bound: f64,
) -> Result<FixedPointReport> {
    let xi = game.simultaneous_gradient(w_star)?;
    let residual = xi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if residual > residual_bound {
        return Err(Error::invalid(format!(
            "not a fixed point: ‖ξ‖∞ = {residual:e} exceeds {residual_bound:e}"
        )));
    }
    let report = jacobian(game, w_star, DEFAULT_FD_STEP)?;
    // Scaled by the larger of ‖S‖ and ‖J‖ so that S ≡ 0 (Hamiltonian) with
    // finite-difference noise still reads as degenerate.
    let scale = report.symmetric.amax().max(report.jacobian.amax());
    let threshold = eig_tol * scale;

    let s_eigenvalues = sorted_eigenvalues(report.symmetric.clone());
    let classification = match Definiteness::of_spectrum(&s_eigenvalues, threshold) {
        Definiteness::Degenerate => Classification::Inconclusive,
        Definiteness::NegativeDefinite => Classification::StableLocalNash,
        Definiteness::PositiveDefinite => Classification::Unstable,
        Definiteness::Indefinite => Classification::SaddleOrIndefinite,
    };
    let block_definiteness: Vec<Definiteness> = (0..game.players())
        .map(|i| Definiteness::of_spectrum(&sorted_eigenvalues(report.symmetric_block(i, i)), threshold))
        .collect();
    let blocks_negative_definite = block_definiteness.iter().all(|d| *d == Definiteness::NegativeDefinite);

    Ok(FixedPointReport {
        location: w_star.to_vec(),
        residual,
        s_eigenvalues,
        full_negative_definite: classification == Classification::StableLocalNash,
        classification,
        tolerance: eig_tol,
        threshold,
        block_definiteness,
        blocks_negative_definite,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonFailure {
    pub seed_index: usize,
    pub seed: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSearch {
    pub roots: Vec<FixedPointReport>,
    pub failures: Vec<NewtonFailure>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn newton(game: &GameDefinition, seed: &[f64], tol: f64, max_iter: usize) -> std::result::Result<Vec<f64>, String> {
    let mut w = seed.to_vec();
    let mut xi = game.simultaneous_gradient(&w).map_err(|e| e.to_string())?;
    for _ in 0..max_iter {
        let r = inf_norm(&xi);
        if r <= tol {
            return Ok(w);
        }
        let jac = jacobian_fd(game, &w, DEFAULT_FD_STEP).map_err(|e| e.to_string())?.jacobian;
        let rhs = -DVector::from_column_slice(&xi);
        let step = jac
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| "singular Jacobian".to_string())?;

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = w.iter().zip(step.iter()).map(|(a, b)| a + lambda * b).collect();
            if let Ok(trial_xi) = game.simultaneous_gradient(&trial) {
                if inf_norm(&trial_xi) < r {
                    accepted = Some((trial, trial_xi));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((next, next_xi)) = accepted else {
            return Err(format!("no decrease after {MAX_HALVINGS} step halvings (‖ξ‖∞ = {r:e})"));
        };
        w = next;
        xi = next_xi;
    }
    if inf_norm(&xi) <= tol {
        Ok(w)
    } else {
        Err(format!("no convergence in {max_iter} iterations"))
    }
}

/// Damped Newton from each seed; converged roots are deduplicated (distance
/// below `10·newton_tol`) and classified.
pub fn find_fixed_points(
    game: &GameDefinition,
    seeds: &[Vec<f64>],
    newton_tol: f64,
    max_iter: usize,
) -> Result<FixedPointSearch> {
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    if newton_tol.is_nan() || newton_tol <= 0.0 {
        return Err(Error::invalid("newton tolerance must be positive"));
    }
    for s in seeds {
        game.partition().check(s)?;
    }
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut failures = Vec::new();
    for (seed_index, seed) in seeds.iter().enumerate() {
        match newton(game, seed, newton_tol, max_iter) {
            Ok(root) => {
                let dup = found.iter().any(|r| {
                    r.iter().zip(&root).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() < 10.0 * newton_tol
                });
                if !dup {
                    found.push(root);
                }
            }
            Err(reason) => failures.push(NewtonFailure {
                seed_index,
                seed: seed.clone(),
                reason,
            }),
        }
    }
    let bound = DEFAULT_RESIDUAL_BOUND.max(newton_tol);
    let roots = found
        .iter()
        .map(|r| classify_with_bound(game, r, DEFAULT_EIG_TOL, bound))
        .collect::<Result<Vec<_>>>()?;
    Ok(FixedPointSearch { roots, failures })
}
