//! Scenario files: a versioned TOML document describing one experiment.

use std::path::PathBuf;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use smgame_core::catalog::{bilinear_near_sm, builtin_game, random_polymatrix_sm, DEFAULT_EPSILON};
use smgame_core::{GameDefinition, GridSpec, LearningRates};

use crate::error::CliError;

pub const SCHEMA: &str = "smgame-scenario/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial: Vec<Vec<f64>>,
    pub game: GameSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<ClassifySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundedness: Option<BoundednessSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Simulate,
    Classify,
    CheckSm,
    Legibility,
    PhaseGrid,
    Boundedness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSpec {
    Builtin {
        name: String,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Polymatrix {
        dims: Vec<usize>,
        concavity: f64,
        seed: u64,
    },
    NearSm {
        dims: Vec<usize>,
        concavity: f64,
        couplings: Vec<CouplingSpec>,
    },
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

/// Bilinear money and goods exchange between two players. Matrices are
/// row-major with `dims[i]` rows and `dims[j]` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub players: [usize; 2],
    pub money: Vec<Vec<f64>>,
    pub goods: Vec<Vec<f64>>,
    pub valuation: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    Rk4,
    Euler,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub kind: IntegratorKind,
    /// `dt` for continuous methods, base step for discrete updates.
    pub step: f64,
    pub steps: usize,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub sample_stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySpec {
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
}

impl Default for ClassifySpec {
    fn default() -> Self {
        Self { newton_tol: default_newton_tol(), max_iter: default_max_iter(), eig_tol: default_eig_tol() }
    }
}

fn default_newton_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    100
}

fn default_eig_tol() -> f64 {
    smgame_core::dynamics::DEFAULT_EIG_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundednessSpec {
    pub radius: f64,
    #[serde(default = "default_shell_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BoundednessSpec {
    fn default() -> Self {
        Self { radius: 5.0, samples: default_shell_samples(), seed: 0 }
    }
}

fn default_shell_samples() -> usize {
    200
}

/// Byte offset to 1-based line and column.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((None, None), |s| {
                let (l, c) = line_col(text, s.start);
                (Some(l), Some(c))
            });
            CliError::Parse { message: e.message().to_string(), line, column }
        })?;
        if scenario.schema != SCHEMA {
            return Err(CliError::invalid("schema", format!("expected \"{SCHEMA}\", got \"{}\"", scenario.schema)));
        }
        Ok(scenario)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::invalid("scenario", e.to_string()))
    }

    pub fn wants(&self, analysis: Analysis) -> bool {
        self.analyses.contains(&analysis)
    }

    pub fn build_game(&self) -> Result<GameDefinition, CliError> {
        let game = match &self.game {
            GameSpec::Builtin { name, epsilon } => builtin_game(name, *epsilon),
            GameSpec::Polymatrix { dims, concavity, seed } => random_polymatrix_sm(dims, *concavity, *seed),
            GameSpec::NearSm { dims, concavity, couplings } => {
                let mut table = Vec::with_capacity(couplings.len());
                for (k, c) in couplings.iter().enumerate() {
                    let [i, j] = c.players;
                    let money = matrix(&c.money).ok_or_else(|| ragged(k, "money"))?;
                    let goods = matrix(&c.goods).ok_or_else(|| ragged(k, "goods"))?;
                    table.push((i, j, money, goods, (c.valuation[0], c.valuation[1])));
                }
                bilinear_near_sm(dims, *concavity, table)
            }
        };
        game.map_err(|e| CliError::invalid("game", e.to_string()))
    }

    pub fn learning_rates(&self, players: usize) -> Result<LearningRates, CliError> {
        match &self.rates {
            None => Ok(LearningRates::unit(players)),
            Some(eta) if eta.len() != players => {
                Err(CliError::invalid("rates", format!("{} rates for {players} players", eta.len())))
            }
            Some(eta) => LearningRates::new(eta.clone()).map_err(|e| CliError::invalid("rates", e.to_string())),
        }
    }

    /// Checks cross-field requirements against the constructed game.
    pub fn validate(&self, game: &GameDefinition) -> Result<(), CliError> {
        self.learning_rates(game.players())?;
        for (k, w) in self.initial.iter().enumerate() {
            if w.len() != game.dim() {
                return Err(CliError::invalid(
                    format!("initial[{k}]"),
                    format!("length {} does not match game dimension {}", w.len(), game.dim()),
                ));
            }
        }
        let needs_points = [Analysis::Simulate, Analysis::Classify, Analysis::Legibility];
        if self.initial.is_empty() && needs_points.iter().any(|a| self.wants(*a)) {
            return Err(CliError::invalid("initial", "at least one starting point is required"));
        }
        if self.wants(Analysis::Simulate) {
            let spec = self
                .integrator
                .as_ref()
                .ok_or_else(|| CliError::invalid("integrator", "required by the simulate analysis"))?;
            if !(spec.step > 0.0 && spec.step.is_finite()) {
                return Err(CliError::invalid("integrator.step", "must be positive"));
            }
            if spec.steps == 0 || spec.sample_stride == 0 {
                return Err(CliError::invalid("integrator", "steps and sample_stride must be at least 1"));
            }
            if !(spec.noise_std >= 0.0 && spec.noise_std.is_finite()) {
                return Err(CliError::invalid("integrator.noise_std", "must be non-negative"));
            }
            if spec.noise_std > 0.0 && spec.kind != IntegratorKind::Discrete {
                return Err(CliError::invalid("integrator.noise_std", "noise is only used by the discrete integrator"));
            }
        }
        if self.wants(Analysis::PhaseGrid) {
            let grid = self.grid.as_ref().ok_or_else(|| CliError::invalid("grid", "required by the phase-grid analysis"))?;
            grid.check().map_err(|e| CliError::invalid("grid", e.to_string()))?;
            if game.dim() != 2 {
                return Err(CliError::invalid("analyses", "phase-grid needs a 2-dimensional game"));
            }
        }
        Ok(())
    }
}

fn matrix(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let ncols = rows.first()?.len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

fn ragged(k: usize, field: &str) -> CliError {
    CliError::invalid(format!("game.couplings[{k}].{field}"), "matrix rows are empty or of unequal length")
}
