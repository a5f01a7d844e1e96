//! Built-in example games and random generators.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{Coupling, GameDefinition, GradientFn, JacobianFn, MarketBuilder, PairTerm, ProfitFn, SelfTerm};
use crate::partition::ParameterPartition;

pub const DEFAULT_EPSILON: f64 = 0.1;

/// Catalog keys with a one-line description of the profits.
pub const CATALOG: &[(&str, &str)] = &[
    ("potential", "π1 = w1w2 - ε/2 w1², π2 = w1w2 - ε/2 w2²"),
    ("half_game", "π1 = w1w2 - ε/2 w1², π2 = -ε/2 w2²"),
    ("minimal_sm", "π1 = w1w2 - ε/2 w1², π2 = -w1w2 - ε/2 w2²"),
    ("legibility_failure", "same profits as potential; the non-legible example"),
    ("swirls", "πi = -|wi|³/6 + wi²/2 ∓ w1w2 (ε ignored)"),
    ("hamiltonian_pair", "π1 = w1w2, π2 = -w1w2 (ε ignored)"),
];

pub fn catalog_keys() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|(k, _)| *k)
}

fn fixed_jacobian(rows: [[f64; 2]; 2]) -> JacobianFn {
    Arc::new(move |_| DMatrix::from_row_slice(2, 2, &[rows[0][0], rows[0][1], rows[1][0], rows[1][1]]))
}

fn two_player_general(
    name: &str,
    p1: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    p2: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    g1: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    g2: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    jac: JacobianFn,
) -> Result<GameDefinition> {
    let profits: Vec<ProfitFn> = vec![Arc::new(p1), Arc::new(p2)];
    let grads: Vec<GradientFn> = vec![Arc::new(g1), Arc::new(g2)];
    GameDefinition::general(name, ParameterPartition::scalar_players(2)?, grads, Some(profits), Some(jac))
}

fn scalar_self(value: impl Fn(f64) -> f64 + Send + Sync + 'static, grad: impl Fn(f64) -> f64 + Send + Sync + 'static) -> SelfTerm {
    SelfTerm::new(move |x| value(x[0]), move |x| vec![grad(x[0])])
}

fn product_coupling(sign: f64) -> Result<Coupling> {
    Coupling::new(0, 1, PairTerm::bilinear(DMatrix::from_element(1, 1, sign)))
}

fn potential(eps: f64) -> Result<GameDefinition> {
    two_player_general(
        "potential",
        move |w| w[0] * w[1] - 0.5 * eps * w[0] * w[0],
        move |w| w[0] * w[1] - 0.5 * eps * w[1] * w[1],
        move |w| vec![w[1] - eps * w[0]],
        move |w| vec![w[0] - eps * w[1]],
        fixed_jacobian([[-eps, 1.0], [1.0, -eps]]),
    )
}

fn half_game(eps: f64) -> Result<GameDefinition> {
    two_player_general(
        "half_game",
        move |w| w[0] * w[1] - 0.5 * eps * w[0] * w[0],
        move |w| -0.5 * eps * w[1] * w[1],
        move |w| vec![w[1] - eps * w[0]],
        move |w| vec![-eps * w[1]],
        fixed_jacobian([[-eps, 1.0], [0.0, -eps]]),
    )
}

fn minimal_sm(eps: f64) -> Result<GameDefinition> {
    let f = move || scalar_self(move |x| -0.5 * eps * x * x, move |x| -eps * x);
    MarketBuilder::new("minimal_sm", &[1, 1])?
        .self_term(0, f())
        .self_term(1, f())
        .coupling(product_coupling(1.0)?)
        .jacobian(fixed_jacobian([[-eps, 1.0], [-1.0, -eps]]))
        .build()
}

// |x|³/6 has derivative |x|x/2 and second derivative |x|; sign(0) = 0 keeps
// the field continuous through the axes.
fn swirls() -> Result<GameDefinition> {
    let f = || scalar_self(|x| -x.abs().powi(3) / 6.0 + 0.5 * x * x, |x| -0.5 * x.abs() * x + x);
    MarketBuilder::new("swirls", &[1, 1])?
        .self_term(0, f())
        .self_term(1, f())
        .coupling(product_coupling(-1.0)?)
        .jacobian(Arc::new(|w| {
            DMatrix::from_row_slice(2, 2, &[1.0 - w[0].abs(), -1.0, 1.0, 1.0 - w[1].abs()])
        }))
        .build()
}

fn hamiltonian_pair() -> Result<GameDefinition> {
    MarketBuilder::new("hamiltonian_pair", &[1, 1])?
        .coupling(product_coupling(1.0)?)
        .jacobian(fixed_jacobian([[0.0, 1.0], [-1.0, 0.0]]))
        .build()
}

/// Looks up a catalog game. `epsilon` is the concavity used by the first
/// four entries and ignored by `swirls` and `hamiltonian_pair`.
pub fn builtin_game(name: &str, epsilon: f64) -> Result<GameDefinition> {
    let needs_eps = matches!(name, "potential" | "half_game" | "minimal_sm" | "legibility_failure");
    if needs_eps && !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    match name {
        "potential" => potential(epsilon),
        "half_game" => half_game(epsilon),
        "minimal_sm" => minimal_sm(epsilon),
        "legibility_failure" => Ok(potential(epsilon)?.renamed("legibility_failure")),
        "swirls" => swirls(),
        "hamiltonian_pair" => hamiltonian_pair(),
        other => Err(Error::invalid(format!(
            "unknown game '{other}'; expected one of {}",
            catalog_keys().collect::<Vec<_>>().join(", ")
        ))),
    }
}

/// The coupling matrices `A_ij` (i < j) of a random polymatrix game, entries
/// i.i.d. uniform on [-1, 1] in row-major order, pairs in lexicographic order.
pub fn polymatrix_coupling_matrices(dims: &[usize], seed: u64) -> Vec<(usize, usize, DMatrix<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..dims.len() {
        for j in i + 1..dims.len() {
            let mut m = DMatrix::zeros(dims[i], dims[j]);
            for r in 0..dims[i] {
                for c in 0..dims[j] {
                    m[(r, c)] = rng.random_range(-1.0..=1.0);
                }
            }
            out.push((i, j, m));
        }
    }
    out
}

/// Unconstrained zero-sum polymatrix market: `g_ij = w_iᵀ A_ij w_j` with
/// `A_ji = -A_ijᵀ` implied, and self terms `f_i = -(c/2)‖w_i‖²`.
pub fn random_polymatrix_sm(dims: &[usize], concavity: f64, seed: u64) -> Result<GameDefinition> {
    if dims.len() < 2 {
        return Err(Error::invalid("a polymatrix game needs at least two players"));
    }
    if !(concavity > 0.0 && concavity.is_finite()) {
        return Err(Error::invalid(format!("concavity must be positive, got {concavity}")));
    }
    let partition = ParameterPartition::new(dims)?;
    let matrices = polymatrix_coupling_matrices(dims, seed);

    let d = partition.total_dim();
    let mut jac = DMatrix::<f64>::from_diagonal_element(d, d, -concavity);
    for (i, j, a) in &matrices {
        let (ri, rj) = (partition.range(*i), partition.range(*j));
        jac.view_mut((ri.start, rj.start), (ri.len(), rj.len())).copy_from(a);
        jac.view_mut((rj.start, ri.start), (rj.len(), ri.len())).copy_from(&(-a.transpose()));
    }

    let mut builder = MarketBuilder::new(format!("polymatrix_{seed}"), dims)?;
    for i in 0..dims.len() {
        builder = builder.self_term(i, SelfTerm::concave_quadratic(concavity));
    }
    for (i, j, a) in matrices {
        builder = builder.coupling(Coupling::new(i, j, PairTerm::bilinear(a))?);
    }
    builder.jacobian(Arc::new(move |_| jac.clone())).build()
}

/// `(i, j, money, goods, (α_ij, α_ji))`.
pub type BilinearCoupling = (usize, usize, DMatrix<f64>, DMatrix<f64>, (f64, f64));

/// Near-SM game with bilinear money and goods couplings and concave
/// quadratic self terms. Each entry is `(i, j, money, goods, (α_ij, α_ji))`.
pub fn bilinear_near_sm(
    dims: &[usize],
    concavity: f64,
    couplings: Vec<BilinearCoupling>,
) -> Result<GameDefinition> {
    let mut builder = MarketBuilder::new("near_sm", dims)?;
    for i in 0..dims.len() {
        builder = builder.self_term(i, SelfTerm::concave_quadratic(concavity));
    }
    for (i, j, money, goods, valuation) in couplings {
        let shape = (dims.get(i).copied(), dims.get(j).copied());
        if shape != (Some(money.nrows()), Some(money.ncols())) || money.shape() != goods.shape() {
            return Err(Error::invalid(format!("coupling ({i}, {j}) matrices do not match player dimensions")));
        }
        builder = builder.coupling(Coupling::new(i, j, PairTerm::bilinear(money))?.with_goods(PairTerm::bilinear(goods), valuation));
    }
    builder.build()
}
