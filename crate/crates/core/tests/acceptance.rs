//! Acceptance criteria, one line per criterion. Exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use smgame_core::calculus::{default_structure_points, sample_points, verify_sm_structure};
use smgame_core::catalog::{bilinear_near_sm, builtin_game, random_polymatrix_sm};
use smgame_core::dynamics::{
    boundedness_probe, classify_fixed_point, find_fixed_points, integrate_continuous, integrate_discrete,
    Classification, ContinuousConfig, DiscreteConfig, Method, DEFAULT_EIG_TOL,
};
use smgame_core::forecasting::{directional_forecast, forecast_ledger, near_sm_sentiment_split, weighted_forecast};
use smgame_core::{jacobian, phase_grid, GameDefinition, GridSpec, LearningRates, StructureTag};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 0.1;

/// Settled swirls cycle radius range from an independent long pilot run,
/// padded by 1e-3.
const SWIRLS_ANNULUS: (f64, f64) = (2.2534, 2.4544);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rk4(dt: f64, steps: usize, stride: usize) -> ContinuousConfig {
    ContinuousConfig { method: Method::Rk4, dt, steps, sample_stride: stride, record_ledgers: false }
}

fn norm(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn in_ball(rng: &mut ChaCha8Rng, radius: f64) -> Vec<f64> {
    loop {
        let w = vec![rng.random_range(-radius..=radius), rng.random_range(-radius..=radius)];
        if norm(&w) <= radius {
            return w;
        }
    }
}

fn random_rates(rng: &mut ChaCha8Rng, n: usize) -> LearningRates {
    LearningRates::new((0..n).map(|_| rng.random_range(0.1..=2.0)).collect()).unwrap()
}

fn legibility_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_add, mut worst_flow, mut worst_quad) = (0.0_f64, 0.0_f64, 0.0_f64);
    for g in 0..50 {
        let n = rng.random_range(2..=5);
        let dims: Vec<usize> = (0..n).map(|_| rng.random_range(1..=4)).collect();
        let game = random_polymatrix_sm(&dims, rng.random_range(0.1..=2.0), g).unwrap();
        let d = game.dim();
        for _ in 0..20 {
            let w: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..=2.0)).collect();
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..=2.0)).collect();
            let rates = random_rates(&mut rng, n);
            let ledger = forecast_ledger(&game, &w, &rates).unwrap();
            worst_add = worst_add.max(ledger.additivity_residual);
            worst_flow = worst_flow.max(ledger.flow_check_residual());
            let df = directional_forecast(&game, &w, &v).unwrap();
            let blocks: f64 = df.per_player_sentiment.iter().sum();
            worst_quad = worst_quad.max((df.aggregate_sentiment - blocks).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_add <= 1e-9 && worst_quad <= 1e-9 && worst_flow <= 1e-4 && secs < 10.0,
        format!("additivity {worst_add:.2e}, vᵀJv split {worst_quad:.2e}, flow fd {worst_flow:.2e}, {secs:.2} s"),
    )
}

fn legibility_failure() -> Outcome {
    let game = builtin_game("legibility_failure", EPS).unwrap();
    let ledger = forecast_ledger(&game, &[1.0, 1.0], &LearningRates::unit(2)).unwrap();
    let expected_aggregate = 1.0 - EPS * (6.0 - 5.0 * EPS + 2.0 * EPS * EPS);
    let expected_sum = -2.0 * EPS * (1.0 - EPS).powi(2);
    let agg = ledger.aggregate_sentiment;
    let sum = ledger.sentiment_sum();
    let pass = (agg - expected_aggregate).abs() <= 1e-9 && (sum - expected_sum).abs() <= 1e-9;
    outcome(
        pass,
        format!(
            "aggregate {agg:.12} (target {expected_aggregate:.3}, flow fd {:.9}, 2(1-ε)³ = {:.3}), \
             per-player sum {sum:.12} (target {expected_sum:.3}), opposite signs: {}",
            ledger.flow_sentiment_fd,
            2.0 * (1.0 - EPS).powi(3),
            agg > 0.0 && sum < 0.0
        ),
    )
}

fn classification() -> Outcome {
    let cases = [
        ("minimal_sm", [0.5, 0.5], Classification::StableLocalNash),
        ("swirls", [0.05, 0.05], Classification::Unstable),
        ("potential", [0.5, 0.5], Classification::SaddleOrIndefinite),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, seed, want) in cases {
        let search = find_fixed_points(&builtin_game(name, EPS).unwrap(), &[seed.to_vec()], 1e-10, 50).unwrap();
        let got = search.roots.first().map(|r| (r.classification, norm(&r.location)));
        let ok = matches!(got, Some((c, r)) if c == want && r < 1e-8);
        pass &= ok;
        notes.push(format!("{name} {:?}", got.map(|g| g.0)));
    }
    let potential = classify_fixed_point(&builtin_game("potential", EPS).unwrap(), &[0.0, 0.0], DEFAULT_EIG_TOL).unwrap();
    pass &= potential.blocks_negative_definite && !potential.full_negative_definite;

    let mut sm_games: Vec<GameDefinition> = ["minimal_sm", "swirls", "hamiltonian_pair"]
        .iter()
        .map(|k| builtin_game(k, EPS).unwrap())
        .collect();
    sm_games.extend((0..10).map(|s| random_polymatrix_sm(&[2, 1, 3], 0.5, s).unwrap()));
    let mut agree = 0;
    for game in &sm_games {
        assert_eq!(game.structure(), StructureTag::SmDeclared);
        let r = classify_fixed_point(game, &vec![0.0; game.dim()], DEFAULT_EIG_TOL).unwrap();
        agree += usize::from(r.blocks_negative_definite == r.full_negative_definite);
    }
    pass &= agree == sm_games.len();
    outcome(pass, format!("{}; block vs full agree on {agree}/{} market fixed points", notes.join(", "), sm_games.len()))
}

/// Closed-form solution of dw/dt = [[−ε, 1], [−1, −ε]] w.
fn minimal_sm_exact(w0: &[f64], t: f64) -> [f64; 2] {
    let (s, c) = t.sin_cos();
    let decay = (-EPS * t).exp();
    [decay * (c * w0[0] + s * w0[1]), decay * (-s * w0[0] + c * w0[1])]
}

fn convergence_across_rates() -> Outcome {
    let game = builtin_game("minimal_sm", EPS).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_final, mut worst_rise) = (0.0_f64, f64::NEG_INFINITY);
    // The slowest decay rate is ε·min(η) = 0.01, so t = 2000 reaches e^{-20}.
    for _ in 0..10 {
        let rates = random_rates(&mut rng, 2);
        let w0 = in_ball(&mut rng, 1.0);
        let traj = integrate_continuous(&game, &w0, &rates, &rk4(0.01, 200_000, 10)).unwrap();
        worst_final = worst_final.max(norm(traj.final_state()));
        let f: Vec<f64> = traj.states.iter().map(|w| weighted_forecast(&game, w, &rates).unwrap()).collect();
        worst_rise = worst_rise.max(f.windows(2).map(|p| p[1] - p[0]).fold(f64::NEG_INFINITY, f64::max));
    }
    let w0 = [1.0, 1.0];
    let traj = integrate_continuous(&game, &w0, &LearningRates::unit(2), &rk4(0.01, 1000, 1)).unwrap();
    let oracle_err = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, w)| {
            let e = minimal_sm_exact(&w0, *t);
            (w[0] - e[0]).abs().max((w[1] - e[1]).abs())
        })
        .fold(0.0, f64::max);
    outcome(
        worst_final < 1e-3 && worst_rise <= 1e-10 && oracle_err <= 1e-8,
        format!("max final ‖w‖ {worst_final:.2e}, max f_η increase {worst_rise:.2e}, rk4 vs exp {oracle_err:.2e}"),
    )
}

fn boundedness() -> Outcome {
    let game = builtin_game("swirls", EPS).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let starts: Vec<Vec<f64>> = (0..10).map(|_| in_ball(&mut rng, 3.0)).collect();
    let rates: Vec<LearningRates> = (0..10).map(|_| random_rates(&mut rng, 2)).collect();
    let mut sup = 0.0_f64;
    for w0 in &starts {
        for eta in &rates {
            let traj = integrate_continuous(&game, w0, eta, &rk4(0.01, 20_000, 1)).unwrap();
            sup = sup.max(traj.max_norm());
        }
    }
    let probe = boundedness_probe(&game, 5.0, 200, &LearningRates::unit(2), 0).unwrap();
    outcome(
        sup <= 10.0 && probe.negative_sentiment_on_shell,
        format!("sup ‖w‖ {sup:.4} over 100 runs, shell r=5 worst sentiment {:.3}", probe.worst_value),
    )
}

fn window_rms(states: &[Vec<f64>], coord: Option<usize>) -> f64 {
    let window = &states[states.len() - 10_000..];
    let sq: f64 = window
        .iter()
        .map(|w| match coord {
            Some(k) => w[k] * w[k],
            None => w.iter().map(|x| x * x).sum(),
        })
        .sum();
    (sq / window.len() as f64).sqrt()
}

fn noisy_discrete_dynamics() -> Outcome {
    let cfg = DiscreteConfig {
        base_step: 0.05,
        steps: 20_000,
        noise_std: 0.01,
        seed: 0,
        sample_stride: 1,
        record_ledgers: false,
    };
    let slow = LearningRates::new(vec![1.0, 0.125]).unwrap();
    let run = |name: &str, rates: &LearningRates| {
        integrate_discrete(&builtin_game(name, EPS).unwrap(), &[1.0, 1.0], rates, &cfg).unwrap().states
    };
    let half_slow = run("half_game", &slow);
    let sm_slow = run("minimal_sm", &slow);
    let sm_unit = run("minimal_sm", &LearningRates::unit(2));
    let ratio_half = window_rms(&half_slow, Some(0)) / window_rms(&sm_slow, Some(0));
    let ratio_sm = window_rms(&sm_slow, None) / window_rms(&sm_unit, None);
    let spread = ratio_sm.max(1.0 / ratio_sm);
    outcome(
        ratio_half >= 5.0 && spread < 2.0,
        format!("half/minimal w1 rms ratio {ratio_half:.2}, minimal (1,1/8) vs (1,1) distance ratio {ratio_sm:.2}"),
    )
}

fn limit_cycle_and_sentiment_map() -> Outcome {
    let game = builtin_game("swirls", EPS).unwrap();
    let unit = LearningRates::unit(2);
    let (lo, hi) = SWIRLS_ANNULUS;
    let mut radii = Vec::new();
    for w0 in [[0.1, 0.1], [3.0, 3.0]] {
        let traj = integrate_continuous(&game, &w0, &unit, &rk4(0.005, 40_000, 1000)).unwrap();
        radii.push(norm(traj.final_state()));
    }
    let in_annulus = radii.iter().all(|r| (lo..=hi).contains(r));

    let grid = GridSpec::new(-3.0, 3.0, 101).unwrap();
    let nodes = phase_grid(&game, &unit, &grid).unwrap();
    let at = |a: usize, b: usize| &nodes[a * 101 + b];
    let corners = [at(0, 0), at(0, 100), at(100, 0), at(100, 100)];
    let corners_negative = corners.iter().all(|n| n.sign < 0);
    let mut near_origin_positive = true;
    for a in 49..=51 {
        for b in 49..=51 {
            if (a, b) != (50, 50) {
                near_origin_positive &= at(a, b).sign > 0;
            }
        }
    }
    let boundary_positive = nodes
        .iter()
        .filter(|n| (n.w[0].abs() == 3.0 || n.w[1].abs() == 3.0) && n.sign > 0)
        .count();
    outcome(
        in_annulus && corners_negative && near_origin_positive,
        format!(
            "final radii {:.4}, {:.4} in [{lo}, {hi}]; origin node sentiment {:.1e}, neighbours positive {near_origin_positive}; \
             |w_i| = 3 corners negative {corners_negative} ({boundary_positive} positive nodes elsewhere on the square)",
            radii[0],
            radii[1],
            at(50, 50).sentiment
        ),
    )
}

fn hamiltonian_conservation() -> Outcome {
    let game = builtin_game("hamiltonian_pair", EPS).unwrap();
    let traj = integrate_continuous(&game, &[1.0, 0.0], &LearningRates::unit(2), &rk4(0.01, 1000, 1)).unwrap();
    let (mut energy, mut orbit) = (0.0_f64, 0.0_f64);
    for (t, w) in traj.times.iter().zip(&traj.states) {
        let xi = game.simultaneous_gradient(w).unwrap();
        energy = energy.max((xi[0] * xi[0] + xi[1] * xi[1] - 1.0).abs());
        orbit = orbit.max((w[0] - t.cos()).abs().max((w[1] + t.sin()).abs()));
    }
    outcome(energy < 1e-6 && orbit < 1e-7, format!("energy drift {energy:.2e}, orbit error {orbit:.2e}"))
}

fn structure_detection() -> Outcome {
    let verdict = |game: &GameDefinition| verify_sm_structure(game, &default_structure_points(game, 9), 1e-8).unwrap();
    let mut pass = true;
    for name in ["minimal_sm", "swirls", "hamiltonian_pair"] {
        pass &= verdict(&builtin_game(name, EPS).unwrap()).is_sm;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for s in 0..20 {
        let n = rng.random_range(2..=5);
        let dims: Vec<usize> = (0..n).map(|_| rng.random_range(1..=4)).collect();
        pass &= verdict(&random_polymatrix_sm(&dims, 1.0, s).unwrap()).is_sm;
    }
    let potential = verdict(&builtin_game("potential", EPS).unwrap());
    let half = verdict(&builtin_game("half_game", EPS).unwrap());
    pass &= !potential.is_sm && (potential.max_offblock_s_norm - 1.0).abs() <= 1e-9;
    pass &= !half.is_sm && (half.max_offblock_s_norm - 0.5).abs() <= 1e-9;
    outcome(
        pass,
        format!(
            "markets detected, potential off-block {:.12}, half_game off-block {:.12}",
            potential.max_offblock_s_norm, half.max_offblock_s_norm
        ),
    )
}

fn near_sm_corrections() -> Outcome {
    let one = || DMatrix::from_element(1, 1, 1.0);
    let build = |alpha| bilinear_near_sm(&[1, 1], 0.3, vec![(0, 1, one(), one(), alpha)]).unwrap();
    let (skewed, level) = (build((2.0, 1.0)), build((1.5, 1.5)));
    let points = sample_points(2, 20, -2.0, 2.0, 12);
    let unit = LearningRates::unit(2);
    let (mut residual, mut level_correction, mut vs_hand) = (0.0_f64, 0.0_f64, 0.0_f64);
    for w in &points {
        let split = near_sm_sentiment_split(&skewed, w, &unit).unwrap();
        residual = residual.max(split.residual());
        let xi = skewed.simultaneous_gradient(w).unwrap();
        vs_hand = vs_hand.max((split.correction_sum - xi[0] * xi[1]).abs());
        let total_check = jacobian(&skewed, w, 1e-4).unwrap().quadratic_form(&xi);
        residual = residual.max((split.total - total_check).abs());
        level_correction = level_correction.max(near_sm_sentiment_split(&level, w, &unit).unwrap().correction_sum.abs());
    }
    outcome(
        residual <= 1e-6 && level_correction < 1e-10,
        format!("max |total - blocks - corrections| {residual:.2e}, correction vs ξ1ξ2 {vs_hand:.2e}, equal valuations {level_correction:.2e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("legibility identity", legibility_identity),
        ("legibility failure closed forms", legibility_failure),
        ("fixed point classification", classification),
        ("convergence across learning rates", convergence_across_rates),
        ("boundedness", boundedness),
        ("discrete-time noisy dynamics", noisy_discrete_dynamics),
        ("limit cycle and sentiment map", limit_cycle_and_sentiment_map),
        ("hamiltonian conservation", hamiltonian_conservation),
        ("structure detection", structure_detection),
        ("near-market corrections", near_sm_corrections),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {} {name}: {}", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
