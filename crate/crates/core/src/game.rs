//! Smooth games: parameter partitions, profit and gradient oracles, and the
//! pairwise zero-sum ("smooth market") construction from self terms and
//! couplings.
//!
//! A game is immutable after construction. All oracles are `Send + Sync`
//! closures so evaluations can run from any number of threads.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{LearningRates, ParameterPartition};

pub type ProfitFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

type PairValueFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type PairGradFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureTag {
    General,
    SmDeclared,
    NearSm,
}

/// A term `f_i(w_i)` that depends only on the owning player's parameters.
#[derive(Clone)]
pub struct SelfTerm {
    value: ProfitFn,
    grad: GradientFn,
}

impl SelfTerm {
    pub fn new<V, G>(value: V, grad: G) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            grad: Arc::new(grad),
        }
    }

    /// `f(x) = -(c/2)‖x‖²`.
    pub fn concave_quadratic(c: f64) -> Self {
        Self::new(
            move |x| -0.5 * c * x.iter().map(|v| v * v).sum::<f64>(),
            move |x| x.iter().map(|v| -c * v).collect(),
        )
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
}

/// A scalar function of two players' parameters with its partial gradients.
#[derive(Clone)]
pub struct PairTerm {
    value: PairValueFn,
    grad_first: PairGradFn,
    grad_second: PairGradFn,
}

impl PairTerm {
    pub fn new<V, G1, G2>(value: V, grad_first: G1, grad_second: G2) -> Self
    where
        V: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        G1: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        G2: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            grad_first: Arc::new(grad_first),
            grad_second: Arc::new(grad_second),
        }
    }

    /// `x ↦ xᵀ M y`.
    pub fn bilinear(m: DMatrix<f64>) -> Self {
        let (mv, m1, m2) = (m.clone(), m.clone(), m);
        Self::new(
            move |x, y| {
                let mut acc = 0.0;
                for (r, xr) in x.iter().enumerate() {
                    for (c, yc) in y.iter().enumerate() {
                        acc += xr * mv[(r, c)] * yc;
                    }
                }
                acc
            },
            move |_x, y| (0..m1.nrows()).map(|r| (0..m1.ncols()).map(|c| m1[(r, c)] * y[c]).sum()).collect(),
            move |x, _y| (0..m2.ncols()).map(|c| (0..m2.nrows()).map(|r| x[r] * m2[(r, c)]).sum()).collect(),
        )
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.value)(x, y)
    }

    pub fn grad_first(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (self.grad_first)(x, y)
    }

    pub fn grad_second(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (self.grad_second)(x, y)
    }
}

/// Goods exchanged alongside money: `ω_ij` with subjective valuations
/// `(α_ij, α_ji)`. Player `i` books `α_ij ω_ij`, player `j` books
/// `α_ji ω_ji = -α_ji ω_ij`.
#[derive(Clone)]
pub struct GoodsExchange {
    pub value: PairTerm,
    pub valuation: (f64, f64),
}

/// A pairwise interaction between players `first < second`.
///
/// Only `g_ij` is stored; the counterparty's term is its negation, so the
/// monetary part is zero-sum by construction.
#[derive(Clone)]
pub struct Coupling {
    first: usize,
    second: usize,
    money: PairTerm,
    goods: Option<GoodsExchange>,
}

impl Coupling {
    pub fn new(first: usize, second: usize, money: PairTerm) -> Result<Self> {
        if first >= second {
            return Err(Error::invalid(format!(
                "coupling players must satisfy i < j, got ({first}, {second})"
            )));
        }
        Ok(Self {
            first,
            second,
            money,
            goods: None,
        })
    }

    pub fn with_goods(mut self, goods: PairTerm, valuation: (f64, f64)) -> Self {
        self.goods = Some(GoodsExchange {
            value: goods,
            valuation,
        });
        self
    }

    pub fn players(&self) -> (usize, usize) {
        (self.first, self.second)
    }

    pub fn money(&self) -> &PairTerm {
        &self.money
    }

    pub fn goods(&self) -> Option<&GoodsExchange> {
        self.goods.as_ref()
    }

    /// `(α_ij, α_ji)`; `(1, 1)` when no goods are exchanged.
    pub fn valuation(&self) -> (f64, f64) {
        self.goods.as_ref().map_or((1.0, 1.0), |g| g.valuation)
    }

    /// `g_ij(w_i, w_j)`.
    pub fn g_forward(&self, wi: &[f64], wj: &[f64]) -> f64 {
        self.money.value(wi, wj)
    }

    /// `g_ji(w_j, w_i) = -g_ij(w_i, w_j)`.
    pub fn g_backward(&self, wj: &[f64], wi: &[f64]) -> f64 {
        -self.money.value(wi, wj)
    }
}

/// A smooth game.
#[derive(Clone)]
pub struct GameDefinition {
    name: String,
    partition: ParameterPartition,
    gradients: Vec<GradientFn>,
    profits: Option<Vec<ProfitFn>>,
    jacobian: Option<JacobianFn>,
    structure: StructureTag,
    self_terms: Vec<Option<SelfTerm>>,
    couplings: Vec<Coupling>,
}

impl fmt::Debug for GameDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameDefinition")
            .field("name", &self.name)
            .field("dims", &self.partition.dims())
            .field("structure", &self.structure)
            .field("has_profits", &self.profits.is_some())
            .field("has_jacobian", &self.jacobian.is_some())
            .field("couplings", &self.couplings.len())
            .finish()
    }
}

impl GameDefinition {
    /// A general smooth game from per-player gradient oracles and, optionally,
    /// profit oracles and an analytic Jacobian.
    pub fn general(
        name: impl Into<String>,
        partition: ParameterPartition,
        gradients: Vec<GradientFn>,
        profits: Option<Vec<ProfitFn>>,
        jacobian: Option<JacobianFn>,
    ) -> Result<Self> {
        let n = partition.players();
        if gradients.len() != n {
            return Err(Error::invalid(format!(
                "{} gradient oracles for {n} players",
                gradients.len()
            )));
        }
        if let Some(p) = &profits {
            if p.len() != n {
                return Err(Error::invalid(format!("{} profit oracles for {n} players", p.len())));
            }
        }
        Ok(Self {
            name: name.into(),
            partition,
            gradients,
            profits,
            jacobian,
            structure: StructureTag::General,
            self_terms: Vec::new(),
            couplings: Vec::new(),
        })
    }

    /// The game whose simultaneous gradient is a given vector field: one
    /// scalar player per coordinate, no profit oracles. Profits can be
    /// recovered with [`profit_from_vector_field`].
    pub fn from_vector_field(name: impl Into<String>, dim: usize, field: FieldFn) -> Result<Self> {
        let partition = ParameterPartition::scalar_players(dim)?;
        let gradients = (0..dim)
            .map(|i| {
                let field = Arc::clone(&field);
                Arc::new(move |w: &[f64]| vec![field(w)[i]]) as GradientFn
            })
            .collect();
        Self::general(name, partition, gradients, None, None)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn partition(&self) -> &ParameterPartition {
        &self.partition
    }

    pub fn players(&self) -> usize {
        self.partition.players()
    }

    pub fn dim(&self) -> usize {
        self.partition.total_dim()
    }

    pub fn structure(&self) -> StructureTag {
        self.structure
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn self_term(&self, player: usize) -> Option<&SelfTerm> {
        self.self_terms.get(player).and_then(Option::as_ref)
    }

    pub fn has_profits(&self) -> bool {
        self.profits.is_some()
    }

    pub fn analytic_jacobian(&self) -> Option<&JacobianFn> {
        self.jacobian.as_ref()
    }

    pub fn with_jacobian(mut self, jacobian: JacobianFn) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    pub(crate) fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `ξ_i(w)` for a single player.
    pub fn player_gradient(&self, player: usize, w: &[f64]) -> Result<Vec<f64>> {
        self.partition.check(w)?;
        if player >= self.players() {
            return Err(Error::invalid(format!("no player {player}")));
        }
        let g = (self.gradients[player])(w);
        if g.len() != self.partition.dim(player) {
            return Err(Error::Dimension {
                expected: self.partition.dim(player),
                got: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { player });
        }
        Ok(g)
    }

    /// The simultaneous gradient `ξ(w) = (ξ_1(w), …, ξ_n(w))`.
    pub fn simultaneous_gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.partition.check(w)?;
        let mut xi = Vec::with_capacity(self.dim());
        for player in 0..self.players() {
            xi.extend(self.player_gradient(player, w)?);
        }
        Ok(xi)
    }

    /// `ξ_η(w)`: player `i`'s slice scaled by `η_i`.
    pub fn weighted_gradient(&self, w: &[f64], rates: &LearningRates) -> Result<Vec<f64>> {
        rates.check(&self.partition)?;
        let mut xi = self.simultaneous_gradient(w)?;
        scale_by_player(&self.partition, rates, &mut xi);
        Ok(xi)
    }

    /// `π_i(w)`, either from a profit oracle or assembled from self terms and
    /// couplings.
    pub fn profit(&self, player: usize, w: &[f64]) -> Result<f64> {
        self.partition.check(w)?;
        if player >= self.players() {
            return Err(Error::invalid(format!("no player {player}")));
        }
        match &self.profits {
            Some(p) => Ok((p[player])(w)),
            None => Err(Error::Unsupported(format!(
                "game '{}' is gradient-only; use profit_from_vector_field",
                self.name
            ))),
        }
    }

    /// `Σ_i π_i(w)`.
    pub fn aggregate_profit(&self, w: &[f64]) -> Result<f64> {
        (0..self.players()).map(|i| self.profit(i, w)).sum()
    }

    /// `Σ_i f_i(w_i)` over the self terms; zero-valued for players without one.
    pub fn aggregate_self_profit(&self, w: &[f64]) -> Result<f64> {
        self.partition.check(w)?;
        Ok((0..self.players())
            .filter_map(|i| self.self_term(i).map(|f| f.value(self.partition.slice(w, i))))
            .sum())
    }
}

pub(crate) fn scale_by_player(partition: &ParameterPartition, rates: &LearningRates, v: &mut [f64]) {
    for player in 0..partition.players() {
        let eta = rates.get(player);
        for x in &mut v[partition.range(player)] {
            *x *= eta;
        }
    }
}

/// Assembles a game with profits of the form
/// `π_i = f_i(w_i) + Σ_j g_ij(w_i, w_j) [+ α_ij ω_ij(w_i, w_j)]`.
pub struct MarketBuilder {
    name: String,
    partition: ParameterPartition,
    self_terms: Vec<Option<SelfTerm>>,
    couplings: Vec<Coupling>,
    jacobian: Option<JacobianFn>,
}

impl MarketBuilder {
    pub fn new(name: impl Into<String>, dims: &[usize]) -> Result<Self> {
        let partition = ParameterPartition::new(dims)?;
        let n = partition.players();
        Ok(Self {
            name: name.into(),
            partition,
            self_terms: vec![None; n],
            couplings: Vec::new(),
            jacobian: None,
        })
    }

    pub fn self_term(mut self, player: usize, term: SelfTerm) -> Self {
        if player < self.self_terms.len() {
            self.self_terms[player] = Some(term);
        }
        self
    }

    pub fn coupling(mut self, coupling: Coupling) -> Self {
        self.couplings.push(coupling);
        self
    }

    pub fn jacobian(mut self, jacobian: JacobianFn) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    pub fn build(self) -> Result<GameDefinition> {
        let n = self.partition.players();
        for c in &self.couplings {
            let (i, j) = c.players();
            if j >= n {
                return Err(Error::invalid(format!("coupling ({i}, {j}) references a missing player")));
            }
            let (a, b) = c.valuation();
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::invalid(format!("coupling ({i}, {j}) has non-finite valuations")));
            }
        }
        let near = self.couplings.iter().any(|c| c.valuation() != (1.0, 1.0));
        let structure = if near { StructureTag::NearSm } else { StructureTag::SmDeclared };

        let parts = Arc::new(MarketParts {
            partition: self.partition.clone(),
            self_terms: self.self_terms.clone(),
            couplings: self.couplings.clone(),
        });
        let gradients = (0..n)
            .map(|i| {
                let parts = Arc::clone(&parts);
                Arc::new(move |w: &[f64]| parts.gradient(i, w)) as GradientFn
            })
            .collect();
        let profits = (0..n)
            .map(|i| {
                let parts = Arc::clone(&parts);
                Arc::new(move |w: &[f64]| parts.profit(i, w)) as ProfitFn
            })
            .collect();

        Ok(GameDefinition {
            name: self.name,
            partition: self.partition,
            gradients,
            profits: Some(profits),
            jacobian: self.jacobian,
            structure,
            self_terms: self.self_terms,
            couplings: self.couplings,
        })
    }
}

struct MarketParts {
    partition: ParameterPartition,
    self_terms: Vec<Option<SelfTerm>>,
    couplings: Vec<Coupling>,
}

impl MarketParts {
    fn profit(&self, player: usize, w: &[f64]) -> f64 {
        let p = &self.partition;
        let mut total = self.self_terms[player]
            .as_ref()
            .map_or(0.0, |f| f.value(p.slice(w, player)));
        for c in &self.couplings {
            let (i, j) = c.players();
            let (wi, wj) = (p.slice(w, i), p.slice(w, j));
            if player == i {
                total += c.g_forward(wi, wj);
                if let Some(g) = c.goods() {
                    total += g.valuation.0 * g.value.value(wi, wj);
                }
            } else if player == j {
                total += c.g_backward(wj, wi);
                if let Some(g) = c.goods() {
                    total -= g.valuation.1 * g.value.value(wi, wj);
                }
            }
        }
        total
    }

    fn gradient(&self, player: usize, w: &[f64]) -> Vec<f64> {
        let p = &self.partition;
        let mut grad = self.self_terms[player]
            .as_ref()
            .map_or_else(|| vec![0.0; p.dim(player)], |f| f.grad(p.slice(w, player)));
        for c in &self.couplings {
            let (i, j) = c.players();
            let (wi, wj) = (p.slice(w, i), p.slice(w, j));
            if player == i {
                add_scaled(&mut grad, &c.money().grad_first(wi, wj), 1.0);
                if let Some(g) = c.goods() {
                    add_scaled(&mut grad, &g.value.grad_first(wi, wj), g.valuation.0);
                }
            } else if player == j {
                add_scaled(&mut grad, &c.money().grad_second(wi, wj), -1.0);
                if let Some(g) = c.goods() {
                    add_scaled(&mut grad, &g.value.grad_second(wi, wj), -g.valuation.1);
                }
            }
        }
        grad
    }
}

fn add_scaled(acc: &mut [f64], v: &[f64], s: f64) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += s * b;
    }
}

/// Recovers `π_i(w) = ∫_0^{w_i} ξ_i(w_1, …, x, …, w_d) dx` by composite
/// Simpson quadrature. Only defined for scalar players; an odd
/// `quadrature_steps` is rounded up to the next even count.
pub fn profit_from_vector_field(
    game: &GameDefinition,
    player: usize,
    w: &[f64],
    quadrature_steps: usize,
) -> Result<f64> {
    let partition = game.partition();
    partition.check(w)?;
    if player >= game.players() {
        return Err(Error::invalid(format!("no player {player}")));
    }
    if partition.dim(player) != 1 {
        return Err(Error::Unsupported(format!(
            "quadrature profit needs a scalar player; player {player} has {} parameters",
            partition.dim(player)
        )));
    }
    if quadrature_steps < 2 {
        return Err(Error::invalid("quadrature needs at least 2 steps"));
    }
    let n = quadrature_steps + quadrature_steps % 2;
    let k = partition.offsets()[player];
    let upper = w[k];
    let h = upper / n as f64;
    let mut probe = w.to_vec();
    let mut eval = |x: f64| -> Result<f64> {
        probe[k] = x;
        Ok(game.player_gradient(player, &probe)?[0])
    };
    let mut sum = eval(0.0)? + eval(upper)?;
    for m in 1..n {
        let weight = if m % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * eval(m as f64 * h)?;
    }
    Ok(sum * h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> FieldFn {
        Arc::new(f)
    }

    #[test]
    fn dimension_mismatch_is_an_argument_error() {
        let g = GameDefinition::from_vector_field("z", 2, field(|_| vec![0.0, 0.0])).unwrap();
        assert!(matches!(g.simultaneous_gradient(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn non_finite_oracle_reports_player() {
        let g = GameDefinition::from_vector_field("nan", 2, field(|w| vec![w[0], f64::NAN])).unwrap();
        match g.simultaneous_gradient(&[1.0, 1.0]) {
            Err(Error::NonFiniteGradient { player }) => assert_eq!(player, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_oracle_length_is_rejected() {
        let p = ParameterPartition::new(&[2]).unwrap();
        let g = GameDefinition::general("bad", p, vec![Arc::new(|_: &[f64]| vec![0.0])], None, None).unwrap();
        assert!(g.simultaneous_gradient(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_only_games_refuse_profit_queries() {
        let g = GameDefinition::from_vector_field("f", 2, field(|w| vec![w[1], -w[0]])).unwrap();
        assert!(matches!(g.profit(0, &[1.0, 1.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn quadrature_recovers_polynomial_profits() {
        let eps = 0.1;
        let g = GameDefinition::from_vector_field("min", 2, field(move |w| vec![w[1] - eps * w[0], -w[0] - eps * w[1]]))
            .unwrap();
        let p = profit_from_vector_field(&g, 0, &[1.0, 1.0], 100).unwrap();
        assert!((p - 0.95).abs() < 1e-12, "{p}");

        let h = GameDefinition::from_vector_field("ham", 2, field(|w| vec![w[1], -w[0]])).unwrap();
        let p = profit_from_vector_field(&h, 0, &[2.0, 3.0], 100).unwrap();
        assert!((p - 6.0).abs() < 1e-12, "{p}");

        let z = GameDefinition::from_vector_field("zero", 3, field(|_| vec![0.0; 3])).unwrap();
        assert_eq!(profit_from_vector_field(&z, 2, &[1.0, -2.0, 3.0], 10).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_rejects_vector_players_and_tiny_step_counts() {
        let p = ParameterPartition::new(&[2, 1]).unwrap();
        let grads: Vec<GradientFn> = vec![Arc::new(|_: &[f64]| vec![0.0, 0.0]), Arc::new(|_: &[f64]| vec![0.0])];
        let g = GameDefinition::general("v", p, grads, None, None).unwrap();
        assert!(matches!(profit_from_vector_field(&g, 0, &[0.0; 3], 10), Err(Error::Unsupported(_))));
        assert!(profit_from_vector_field(&g, 1, &[0.0; 3], 1).is_err());
    }

    #[test]
    fn quadrature_derivative_matches_cubic_field() {
        // ξ_0 = w0² w1 - 3 w0 + w1³, antiderivative in w0 is exact for Simpson.
        let g = GameDefinition::from_vector_field(
            "cubic",
            2,
            field(|w| vec![w[0] * w[0] * w[1] - 3.0 * w[0] + w[1].powi(3), 0.0]),
        )
        .unwrap();
        let h = 1e-3;
        for &(a, b) in &[(0.7, -1.3), (-1.9, 0.4), (1.5, 1.5)] {
            let up = profit_from_vector_field(&g, 0, &[a + h, b], 200).unwrap();
            let dn = profit_from_vector_field(&g, 0, &[a - h, b], 200).unwrap();
            let fd = (up - dn) / (2.0 * h);
            let exact = g.simultaneous_gradient(&[a, b]).unwrap()[0];
            assert!((fd - exact).abs() < 1e-6, "{fd} vs {exact}");
        }
    }

    #[test]
    fn coupling_order_is_enforced() {
        assert!(Coupling::new(1, 0, PairTerm::bilinear(DMatrix::identity(1, 1))).is_err());
        assert!(Coupling::new(0, 0, PairTerm::bilinear(DMatrix::identity(1, 1))).is_err());
    }

    #[test]
    fn missing_player_in_coupling_fails_build() {
        let c = Coupling::new(0, 2, PairTerm::bilinear(DMatrix::identity(1, 1))).unwrap();
        assert!(MarketBuilder::new("m", &[1, 1]).unwrap().coupling(c).build().is_err());
    }

    #[test]
    fn bilinear_term_gradients() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let t = PairTerm::bilinear(m);
        let x = [0.3, -2.0];
        let y = [1.0, 2.0, -1.0];
        // xᵀMy = 0.3*(1+4-3) - 2*(-1+1-4) = 0.6 + 8
        assert!((t.value(&x, &y) - 8.6).abs() < 1e-12);
        assert_eq!(t.grad_first(&x, &y), vec![2.0, -4.0]);
        let gy = t.grad_second(&x, &y);
        let want = [0.3 + 2.0, 0.6 - 1.0, 0.9 - 8.0];
        for (a, b) in gy.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
