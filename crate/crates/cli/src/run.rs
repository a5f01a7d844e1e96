//! Executes a scenario and writes its artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use smgame_core::calculus::{default_structure_points, verify_sm_structure};
use smgame_core::dynamics::{
    boundedness_probe, find_fixed_points, integrate_continuous, integrate_discrete, ContinuousConfig, DiscreteConfig,
    Method, Trajectory,
};
use smgame_core::forecasting::{forecast_ledger, near_sm_sentiment_split};
use smgame_core::{phase_grid, Error as CoreError, GameDefinition, LearningRates, StructureTag};

use crate::error::CliError;
use crate::scenario::{Analysis, IntegratorKind, Scenario};

pub const DEFAULT_OUTPUT_DIR: &str = "smgame-out";
const STRUCTURE_TOLERANCE: f64 = 1e-8;

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub scenario_sha256: String,
    pub wall_clock_seconds: f64,
    pub status: RunStatus,
    pub artifacts: Vec<String>,
    /// The scenario as executed, after command-line overrides.
    pub scenario: Scenario,
}

#[derive(Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
    /// First divergence encountered, if any. Its outputs are still written.
    pub divergence: Option<CliError>,
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_row(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let row: Vec<String> = fields.into_iter().collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

fn numbers(xs: &[f64]) -> impl Iterator<Item = String> + '_ {
    xs.iter().map(|x| fmt_f64(*x))
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Writer {
    fn put(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(path, e))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn put_toml<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = toml::to_string(value).map_err(|e| CliError::invalid(name, e.to_string()))?;
        self.put(name, &text)
    }
}

pub fn trajectory_csv(traj: &Trajectory, players: usize) -> String {
    let d = traj.states.first().map_or(0, Vec::len);
    let mut out = String::new();
    let header = std::iter::once("t".to_string())
        .chain((0..d).map(|k| format!("w_{k}")))
        .chain((1..=players).map(|i| format!("f_{i}")))
        .chain((1..=players).map(|i| format!("s_{i}")))
        .chain(["f_eta", "s_eta", "additivity_residual"].map(String::from));
    csv_row(&mut out, header);
    for (k, (t, w)) in traj.times.iter().zip(&traj.states).enumerate() {
        let mut row: Vec<String> = std::iter::once(fmt_f64(*t)).chain(numbers(w)).collect();
        match traj.ledgers.get(k) {
            Some(l) => {
                row.extend(numbers(&l.per_player_forecast));
                row.extend(numbers(&l.per_player_sentiment));
                row.extend(numbers(&[l.weighted_forecast, l.aggregate_sentiment, l.additivity_residual]));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 2 * players + 3)),
        }
        csv_row(&mut out, row);
    }
    out
}

fn simulate(
    scenario: &Scenario,
    game: &GameDefinition,
    rates: &LearningRates,
    writer: &mut Writer,
    divergence: &mut Option<CliError>,
) -> Result<(), CliError> {
    let spec = scenario.integrator.as_ref().ok_or_else(|| CliError::invalid("integrator", "missing"))?;
    for (run, w0) in scenario.initial.iter().enumerate() {
        let result = match spec.kind {
            IntegratorKind::Rk4 | IntegratorKind::Euler => {
                let method = if spec.kind == IntegratorKind::Rk4 { Method::Rk4 } else { Method::Euler };
                let cfg = ContinuousConfig {
                    method,
                    dt: spec.step,
                    steps: spec.steps,
                    sample_stride: spec.sample_stride,
                    record_ledgers: true,
                };
                integrate_continuous(game, w0, rates, &cfg)
            }
            IntegratorKind::Discrete => {
                let cfg = DiscreteConfig {
                    base_step: spec.step,
                    steps: spec.steps,
                    noise_std: spec.noise_std,
                    seed: spec.seed.wrapping_add(run as u64),
                    sample_stride: spec.sample_stride,
                    record_ledgers: true,
                };
                integrate_discrete(game, w0, rates, &cfg)
            }
        };
        let traj = match result {
            Ok(t) => t,
            Err(CoreError::Diverged { step, last_finite, trajectory }) => {
                divergence.get_or_insert(CliError::Diverged { run, step, last_finite });
                *trajectory
            }
            Err(e) => return Err(e.into()),
        };
        writer.put(&format!("trajectory_{run}.csv"), &trajectory_csv(&traj, game.players()))?;
    }
    Ok(())
}

fn legibility_csv(scenario: &Scenario, game: &GameDefinition, rates: &LearningRates) -> Result<String, CliError> {
    let near_sm = game.structure() == StructureTag::NearSm;
    let mut out = String::new();
    let mut header: Vec<String> = vec!["run".into()];
    header.extend((0..game.dim()).map(|k| format!("w_{k}")));
    header.extend(["f_eta", "s_eta", "s_sum", "additivity_residual", "flow_sentiment_fd"].map(String::from));
    if near_sm {
        header.extend(["block_sum", "correction_sum", "split_residual"].map(String::from));
    }
    csv_row(&mut out, header);
    for (run, w) in scenario.initial.iter().enumerate() {
        let l = forecast_ledger(game, w, rates)?;
        let mut row = vec![run.to_string()];
        row.extend(numbers(w));
        row.extend(numbers(&[
            l.weighted_forecast,
            l.aggregate_sentiment,
            l.sentiment_sum(),
            l.additivity_residual,
            l.flow_sentiment_fd,
        ]));
        if near_sm {
            let s = near_sm_sentiment_split(game, w, rates)?;
            row.extend(numbers(&[s.block_sum, s.correction_sum, s.residual()]));
        }
        csv_row(&mut out, row);
    }
    Ok(out)
}

fn phase_grid_csv(scenario: &Scenario, game: &GameDefinition, rates: &LearningRates) -> Result<String, CliError> {
    let grid = scenario.grid.as_ref().ok_or_else(|| CliError::invalid("grid", "missing"))?;
    let mut out = String::from("w_0,w_1,xi_0,xi_1,f_eta,sentiment,sentiment_sign\n");
    for node in phase_grid(game, rates, grid)? {
        let mut row: Vec<String> = numbers(&[node.w[0], node.w[1], node.xi_eta[0], node.xi_eta[1], node.f_eta, node.sentiment]).collect();
        row.push(node.sign.to_string());
        csv_row(&mut out, row);
    }
    Ok(out)
}

fn dedup_analyses(list: &[Analysis]) -> Vec<Analysis> {
    let mut seen = Vec::new();
    for a in list {
        if !seen.contains(a) {
            seen.push(*a);
        }
    }
    seen
}

/// Parses, validates and executes the scenario at `path`.
pub fn run_scenario(path: &Path, overrides: &Overrides) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let raw = fs::read(path).map_err(|e| CliError::invalid("scenario", format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(raw.clone()).map_err(|_| CliError::invalid("scenario", "file is not UTF-8"))?;
    let mut scenario = Scenario::parse(&text)?;
    if let Some(dir) = &overrides.output_dir {
        scenario.output_dir = Some(dir.clone());
    }
    if let Some(seed) = overrides.seed {
        if let Some(i) = scenario.integrator.as_mut() {
            i.seed = seed;
        }
        if let Some(b) = scenario.boundedness.as_mut() {
            b.seed = seed;
        }
    }
    let game = scenario.build_game()?;
    scenario.validate(&game)?;
    let rates = scenario.learning_rates(game.players())?;

    let dir = scenario.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut writer = Writer { dir: dir.clone(), artifacts: Vec::new() };
    let mut divergence = None;

    for analysis in dedup_analyses(&scenario.analyses) {
        match analysis {
            Analysis::Simulate => simulate(&scenario, &game, &rates, &mut writer, &mut divergence)?,
            Analysis::Classify => {
                let spec = scenario.classify.clone().unwrap_or_default();
                let mut search = find_fixed_points(&game, &scenario.initial, spec.newton_tol, spec.max_iter)?;
                if spec.eig_tol != smgame_core::dynamics::DEFAULT_EIG_TOL {
                    for root in &mut search.roots {
                        *root = smgame_core::dynamics::classify_fixed_point(&game, &root.location, spec.eig_tol)?;
                    }
                }
                writer.put_toml("fixed_points.toml", &search)?;
            }
            Analysis::CheckSm => {
                let points = default_structure_points(&game, 0);
                writer.put_toml("sm_verdict.toml", &verify_sm_structure(&game, &points, STRUCTURE_TOLERANCE)?)?;
            }
            Analysis::Legibility => writer.put("legibility.csv", &legibility_csv(&scenario, &game, &rates)?)?,
            Analysis::PhaseGrid => writer.put("phase_grid.csv", &phase_grid_csv(&scenario, &game, &rates)?)?,
            Analysis::Boundedness => {
                let spec = scenario.boundedness.clone().unwrap_or_default();
                let verdict = boundedness_probe(&game, spec.radius, spec.samples, &rates, spec.seed)?;
                writer.put_toml("boundedness.toml", &verdict)?;
            }
        }
    }

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario_sha256: hex::encode(Sha256::digest(&raw)),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        status: if divergence.is_some() { RunStatus::Diverged } else { RunStatus::Ok },
        artifacts: writer.artifacts.clone(),
        scenario,
    };
    writer.put_toml("manifest.toml", &manifest)?;
    Ok(RunSummary { output_dir: dir, manifest, divergence })
}
