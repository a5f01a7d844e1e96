//! Jacobian of the simultaneous gradient, its symmetric/antisymmetric split,
//! and structural checks built on it.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecasting::weighted_forecast;
use crate::game::GameDefinition;
use crate::partition::{LearningRates, ParameterPartition};

/// Central-difference step used throughout.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// `J(w)` together with `S = (J + Jᵀ)/2` and `A = (J - Jᵀ)/2`.
#[derive(Debug, Clone)]
pub struct JacobianReport {
    pub jacobian: DMatrix<f64>,
    pub symmetric: DMatrix<f64>,
    pub antisymmetric: DMatrix<f64>,
    pub partition: ParameterPartition,
    pub point: Vec<f64>,
    /// Step used for probing; 0 when an analytic Jacobian was used.
    pub fd_step: f64,
}

impl JacobianReport {
    pub fn from_matrix(jacobian: DMatrix<f64>, partition: ParameterPartition, point: Vec<f64>, fd_step: f64) -> Self {
        let jt = jacobian.transpose();
        let symmetric = (&jacobian + &jt) * 0.5;
        let antisymmetric = (&jacobian - &jt) * 0.5;
        Self {
            jacobian,
            symmetric,
            antisymmetric,
            partition,
            point,
            fd_step,
        }
    }

    fn view(&self, m: &DMatrix<f64>, i: usize, j: usize) -> DMatrix<f64> {
        let (ri, rj) = (self.partition.range(i), self.partition.range(j));
        m.view((ri.start, rj.start), (ri.len(), rj.len())).into_owned()
    }

    /// `J_ij = ∂ξ_i / ∂w_j`.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.view(&self.jacobian, i, j)
    }

    /// `S_ij`; the diagonal blocks `S_ii` are the players' own Hessians.
    pub fn symmetric_block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.view(&self.symmetric, i, j)
    }

    pub fn antisymmetric_block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.view(&self.antisymmetric, i, j)
    }

    /// Largest `|S_ab|` with `a`, `b` owned by different players.
    pub fn max_offblock_symmetric(&self) -> f64 {
        let d = self.symmetric.nrows();
        let mut worst = 0.0_f64;
        for a in 0..d {
            let pa = self.partition.owner(a);
            for b in 0..d {
                if self.partition.owner(b) != pa {
                    worst = worst.max(self.symmetric[(a, b)].abs());
                }
            }
        }
        worst
    }

    /// `vᵀ J v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let v = DVector::from_column_slice(v);
        v.dot(&(&self.jacobian * &v))
    }

    /// `Σ_i v_iᵀ S_ii v_i`.
    pub fn block_quadratic_forms(&self, v: &[f64]) -> Vec<f64> {
        (0..self.partition.players())
            .map(|i| {
                let vi = DVector::from_column_slice(self.partition.slice(v, i));
                vi.dot(&(self.symmetric_block(i, i) * &vi))
            })
            .collect()
    }
}

/// Central-difference Jacobian of an arbitrary field: column `β` is
/// `(F(w + h e_β) - F(w - h e_β)) / 2h`.
pub fn finite_difference_jacobian<F>(field: F, w: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let d = w.len();
    let mut jac = DMatrix::zeros(d, d);
    let mut probe = w.to_vec();
    for beta in 0..d {
        probe[beta] = w[beta] + h;
        let up = field(&probe).map_err(|_| Error::NonFiniteProbe { coordinate: beta })?;
        probe[beta] = w[beta] - h;
        let dn = field(&probe).map_err(|_| Error::NonFiniteProbe { coordinate: beta })?;
        probe[beta] = w[beta];
        if up.len() != d || dn.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: up.len().min(dn.len()),
            });
        }
        for alpha in 0..d {
            let v = (up[alpha] - dn[alpha]) / (2.0 * h);
            if !v.is_finite() {
                return Err(Error::NonFiniteProbe { coordinate: beta });
            }
            jac[(alpha, beta)] = v;
        }
    }
    Ok(jac)
}

/// The game Jacobian at `w`; uses the analytic oracle when the game has one.
pub fn jacobian(game: &GameDefinition, w: &[f64], fd_step: f64) -> Result<JacobianReport> {
    game.partition().check(w)?;
    match game.analytic_jacobian() {
        Some(jac) => {
            let m = jac(w);
            let d = game.dim();
            if m.shape() != (d, d) {
                return Err(Error::Dimension {
                    expected: d,
                    got: m.nrows(),
                });
            }
            Ok(JacobianReport::from_matrix(m, game.partition().clone(), w.to_vec(), 0.0))
        }
        None => jacobian_fd(game, w, fd_step),
    }
}

/// The game Jacobian by central differences, ignoring any analytic oracle.
pub fn jacobian_fd(game: &GameDefinition, w: &[f64], fd_step: f64) -> Result<JacobianReport> {
    game.partition().check(w)?;
    let m = finite_difference_jacobian(|x| game.simultaneous_gradient(x), w, fd_step)?;
    Ok(JacobianReport::from_matrix(m, game.partition().clone(), w.to_vec(), fd_step))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureVerdict {
    pub is_sm: bool,
    pub max_offblock_s_norm: f64,
    pub tolerance: f64,
    pub sampled_points: usize,
}

/// Checks that the symmetric part of the Jacobian is block diagonal by
/// player at every sampled point.
pub fn verify_sm_structure(game: &GameDefinition, points: &[Vec<f64>], tolerance: f64) -> Result<StructureVerdict> {
    if points.is_empty() {
        return Err(Error::invalid("structure verification needs at least one point"));
    }
    let mut worst = 0.0_f64;
    for w in points {
        worst = worst.max(jacobian(game, w, DEFAULT_FD_STEP)?.max_offblock_symmetric());
    }
    Ok(StructureVerdict {
        is_sm: worst <= tolerance,
        max_offblock_s_norm: worst,
        tolerance,
        sampled_points: points.len(),
    })
}

/// `count` i.i.d. uniform points in `[lo, hi]^dim`.
pub fn sample_points(dim: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(lo..=hi)).collect())
        .collect()
}

/// The default structural sampler: 20 points in `[-2, 2]^d`.
pub fn default_structure_points(game: &GameDefinition, seed: u64) -> Vec<Vec<f64>> {
    sample_points(game.dim(), 20, -2.0, 2.0, seed)
}

/// `‖∇f_η(w) − Jᵀ(w) ξ_η(w)‖_∞` with the left side by central differences.
pub fn check_gradient_of_weighted_forecast(game: &GameDefinition, w: &[f64], rates: &LearningRates) -> Result<f64> {
    let report = jacobian(game, w, DEFAULT_FD_STEP)?;
    let xi_eta = DVector::from_vec(game.weighted_gradient(w, rates)?);
    let analytic = report.jacobian.transpose() * xi_eta;

    let h = DEFAULT_FD_STEP;
    let mut probe = w.to_vec();
    let mut worst = 0.0_f64;
    for k in 0..w.len() {
        probe[k] = w[k] + h;
        let up = weighted_forecast(game, &probe, rates)?;
        probe[k] = w[k] - h;
        let dn = weighted_forecast(game, &probe, rates)?;
        probe[k] = w[k];
        worst = worst.max(((up - dn) / (2.0 * h) - analytic[k]).abs());
    }
    Ok(worst)
}

/// Largest relative gap `|FD(π_i, w_i) − ξ_i| / max(1, |ξ_i|)` over the
/// given points, or `None` for gradient-only games.
pub fn gradient_consistency(game: &GameDefinition, points: &[Vec<f64>], fd_step: f64) -> Result<Option<f64>> {
    if !game.has_profits() {
        return Ok(None);
    }
    let p = game.partition();
    let mut worst = 0.0_f64;
    for w in points {
        let xi = game.simultaneous_gradient(w)?;
        let mut probe = w.clone();
        for k in 0..w.len() {
            let owner = p.owner(k);
            probe[k] = w[k] + fd_step;
            let up = game.profit(owner, &probe)?;
            probe[k] = w[k] - fd_step;
            let dn = game.profit(owner, &probe)?;
            probe[k] = w[k];
            let fd = (up - dn) / (2.0 * fd_step);
            worst = worst.max((fd - xi[k]).abs() / xi[k].abs().max(1.0));
        }
    }
    Ok(Some(worst))
}

/// Mixed second derivative `∂²ω / ∂x ∂y` of a pair term, by central
/// differences of its first-argument gradient in the second argument.
pub fn mixed_second_derivative(
    grad_first: impl Fn(&[f64], &[f64]) -> Vec<f64>,
    x: &[f64],
    y: &[f64],
    h: f64,
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.len(), y.len());
    let mut probe = y.to_vec();
    for c in 0..y.len() {
        probe[c] = y[c] + h;
        let up = grad_first(x, &probe);
        probe[c] = y[c] - h;
        let dn = grad_first(x, &probe);
        probe[c] = y[c];
        for r in 0..x.len() {
            out[(r, c)] = (up[r] - dn[r]) / (2.0 * h);
        }
    }
    out
}
