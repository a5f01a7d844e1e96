use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecasting::{forecast_ledger, ForecastLedger};
use crate::game::GameDefinition;
use crate::partition::LearningRates;

/// States with Euclidean norm above this are treated as divergent.
pub const DIVERGENCE_RADIUS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    Rk4,
    Euler,
    Discrete,
}

impl From<Method> for IntegratorKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Rk4 => IntegratorKind::Rk4,
            Method::Euler => IntegratorKind::Euler,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMeta {
    pub method: IntegratorKind,
    pub dt: f64,
    pub steps: usize,
    pub noise_std: f64,
    pub seed: Option<u64>,
    pub sample_stride: usize,
}

/// Sampled states of one run. `ledgers` is either empty (ledgers disabled)
/// or parallel to `states`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub ledgers: Vec<ForecastLedger>,
    pub meta: IntegratorMeta,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `sup_t ‖w(t)‖₂` over the recorded samples.
    pub fn max_norm(&self) -> f64 {
        self.states.iter().map(|s| norm(s)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousConfig {
    pub method: Method,
    pub dt: f64,
    pub steps: usize,
    pub sample_stride: usize,
    pub record_ledgers: bool,
}

impl Default for ContinuousConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            dt: 0.01,
            steps: 1000,
            sample_stride: 1,
            record_ledgers: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteConfig {
    pub base_step: f64,
    pub steps: usize,
    pub noise_std: f64,
    pub seed: u64,
    pub sample_stride: usize,
    pub record_ledgers: bool,
}

impl Default for DiscreteConfig {
    fn default() -> Self {
        Self {
            base_step: 0.05,
            steps: 20_000,
            noise_std: 0.01,
            seed: 0,
            sample_stride: 1,
            record_ledgers: true,
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Recorder<'a> {
    game: &'a GameDefinition,
    rates: &'a LearningRates,
    stride: usize,
    steps: usize,
    with_ledgers: bool,
    traj: Trajectory,
}

impl<'a> Recorder<'a> {
    fn new(game: &'a GameDefinition, rates: &'a LearningRates, meta: IntegratorMeta, with_ledgers: bool) -> Self {
        Self {
            game,
            rates,
            stride: meta.sample_stride,
            steps: meta.steps,
            with_ledgers,
            traj: Trajectory {
                times: Vec::new(),
                states: Vec::new(),
                ledgers: Vec::new(),
                meta,
            },
        }
    }

    fn offer(&mut self, step: usize, w: &[f64]) -> Result<()> {
        if !step.is_multiple_of(self.stride) && step != self.steps {
            return Ok(());
        }
        if self.with_ledgers {
            self.traj.ledgers.push(forecast_ledger(self.game, w, self.rates)?);
        }
        self.traj.times.push(step as f64 * self.traj.meta.dt);
        self.traj.states.push(w.to_vec());
        Ok(())
    }

    fn diverged(self, step: usize, last_finite: Vec<f64>) -> Error {
        Error::Diverged {
            step,
            last_finite,
            trajectory: Box::new(self.traj),
        }
    }
}

fn validate(game: &GameDefinition, w0: &[f64], rates: &LearningRates, step: f64, stride: usize) -> Result<()> {
    game.partition().check(w0)?;
    if rates.len() != game.players() {
        return Err(Error::invalid(format!("{} learning rates for {} players", rates.len(), game.players())));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!("step size must be positive, got {step}")));
    }
    if stride == 0 {
        return Err(Error::invalid("sample stride must be at least 1"));
    }
    if w0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial state must be finite"));
    }
    Ok(())
}

fn escaped(w: &[f64]) -> bool {
    w.iter().any(|v| !v.is_finite()) || norm(w) > DIVERGENCE_RADIUS
}

fn rk4_step(game: &GameDefinition, rates: &LearningRates, w: &[f64], h: f64) -> Result<Vec<f64>> {
    let f = |x: &[f64]| game.weighted_gradient(x, rates);
    let shift = |base: &[f64], k: &[f64], s: f64| -> Vec<f64> { base.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let k1 = f(w)?;
    let k2 = f(&shift(w, &k1, 0.5 * h))?;
    let k3 = f(&shift(w, &k2, 0.5 * h))?;
    let k4 = f(&shift(w, &k3, h))?;
    Ok((0..w.len())
        .map(|i| w[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Fixed-step integration of `dw/dt = ξ_η(w)`.
pub fn integrate_continuous(
    game: &GameDefinition,
    w0: &[f64],
    rates: &LearningRates,
    config: &ContinuousConfig,
) -> Result<Trajectory> {
    validate(game, w0, rates, config.dt, config.sample_stride)?;
    if config.steps == 0 {
        return Err(Error::invalid("at least one step is required"));
    }
    let meta = IntegratorMeta {
        method: config.method.into(),
        dt: config.dt,
        steps: config.steps,
        noise_std: 0.0,
        seed: None,
        sample_stride: config.sample_stride,
    };
    let mut rec = Recorder::new(game, rates, meta, config.record_ledgers);
    let mut w = w0.to_vec();
    rec.offer(0, &w)?;
    for step in 1..=config.steps {
        let next = match config.method {
            Method::Rk4 => rk4_step(game, rates, &w, config.dt),
            Method::Euler => game
                .weighted_gradient(&w, rates)
                .map(|xi| w.iter().zip(&xi).map(|(a, b)| a + config.dt * b).collect()),
        };
        let next = match next {
            Ok(n) if !escaped(&n) => n,
            Ok(_) | Err(Error::NonFiniteGradient { .. }) => return Err(rec.diverged(step, w)),
            Err(e) => return Err(e),
        };
        w = next;
        rec.offer(step, &w)?;
    }
    Ok(rec.traj)
}

/// Noisy discrete-time updates `w ← w + base_step·(ξ_η(w) + noise)` with
/// i.i.d. Gaussian noise per coordinate from a seeded generator.
pub fn integrate_discrete(
    game: &GameDefinition,
    w0: &[f64],
    rates: &LearningRates,
    config: &DiscreteConfig,
) -> Result<Trajectory> {
    validate(game, w0, rates, config.base_step, config.sample_stride)?;
    if config.steps == 0 {
        return Err(Error::invalid("at least one step is required"));
    }
    if !(config.noise_std >= 0.0 && config.noise_std.is_finite()) {
        return Err(Error::invalid(format!("noise_std must be non-negative, got {}", config.noise_std)));
    }
    let meta = IntegratorMeta {
        method: IntegratorKind::Discrete,
        dt: config.base_step,
        steps: config.steps,
        noise_std: config.noise_std,
        seed: Some(config.seed),
        sample_stride: config.sample_stride,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rec = Recorder::new(game, rates, meta, config.record_ledgers);
    let mut w = w0.to_vec();
    rec.offer(0, &w)?;
    for step in 1..=config.steps {
        let xi = match game.weighted_gradient(&w, rates) {
            Ok(xi) => xi,
            Err(Error::NonFiniteGradient { .. }) => return Err(rec.diverged(step, w)),
            Err(e) => return Err(e),
        };
        let next: Vec<f64> = if config.noise_std == 0.0 {
            w.iter().zip(&xi).map(|(a, b)| a + config.base_step * b).collect()
        } else {
            w.iter()
                .zip(&xi)
                .map(|(a, b)| a + config.base_step * (b + noise.sample(&mut rng)))
                .collect()
        };
        if escaped(&next) {
            return Err(rec.diverged(step, w));
        }
        w = next;
        rec.offer(step, &w)?;
    }
    Ok(rec.traj)
}
