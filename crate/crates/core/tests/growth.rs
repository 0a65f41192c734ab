use nalgebra::{DMatrix, DVector};
use ponowm::agent::{AtrCountMode, InputKey};
use ponowm::harness::run_seed;
use ponowm::maze::MazeTask;
use ponowm::network::ValueNetwork;
use ponowm::solve::stack_and_solve;
use ponowm::{grow_dimension, Agent64, AgentConfig, ExperimentConfig, GrowthMethod, Hrr64, Phase};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn agent(method: GrowthMethod, n: usize, seed: u64) -> (Agent64, MazeTask) {
    let task = MazeTask::po_default();
    let config = AgentConfig {
        hrr_length: n,
        growth_method: method,
        ..AgentConfig::default()
    };
    (Agent64::new(&config, &task, seed).unwrap(), task)
}

fn trained(method: GrowthMethod, n: usize, seed: u64) -> Agent64 {
    let (mut a, task) = agent(method, n, seed);
    let mut env = ChaCha8Rng::seed_from_u64(seed);
    for ep in 0..30 {
        a.run_episode(&task, &mut env, ep, Phase::Train).unwrap();
    }
    a
}

fn memoized(a: &Agent64) -> Vec<InputKey> {
    a.ledger()
        .compound_keys()
        .map(|k| k.try_into().unwrap())
        .collect()
}

fn values(a: &mut Agent64, keys: &[InputKey]) -> Vec<f64> {
    keys.iter().map(|k| a.value_of(k).unwrap()).collect()
}

#[test]
fn transfer_preserves_every_memoized_value() {
    let mut a = trained(GrowthMethod::Transfer, 512, 7);
    let keys = memoized(&a);
    assert!(keys.len() >= 20, "only {} tuples", keys.len());
    let before = values(&mut a, &keys);

    let event = a.force_growth().unwrap();
    assert_eq!((event.from_dimension, event.to_dimension), (512, 1024));
    assert_eq!(event.tuples, keys.len());
    assert!(event.residual.unwrap() < 1e-6);
    assert_eq!(a.dimension(), 1024);
    assert_eq!(a.bank().count(), 2);
    assert_eq!(a.bank().current(), 1);

    let after = values(&mut a, &keys);
    for (k, (x, y)) in keys.iter().zip(before.iter().zip(&after)) {
        assert!((x - y).abs() < 1e-6, "{k:?}: {x} -> {y}");
    }
}

#[test]
fn transfer_without_history_gives_zero_weights() {
    let (mut a, _) = agent(GrowthMethod::Transfer, 64, 1);
    let event = a.force_growth().unwrap();
    assert_eq!(event.tuples, 0);
    assert!(a.network().weights().is_zero());
    let key = a.state_key(4);
    assert_eq!(a.value_of(&key).unwrap(), 1.0);
}

#[test]
fn transfer_single_tuple() {
    let (mut a, _) = agent(GrowthMethod::Transfer, 256, 2);
    let key = a.state_key(3);
    // weights along u give u.w = 0.37
    let u = a.ledger_mut().encode(&key).unwrap().clone();
    let w = u.scaled(0.37 / u.dot(&u).unwrap());
    *a.network_mut() = ValueNetwork::with_weights(w);
    assert!((a.value_of(&key).unwrap() - 1.37).abs() < 1e-12);

    let event = a.force_growth().unwrap();
    assert_eq!(event.tuples, 1);
    assert!((a.value_of(&key).unwrap() - 1.37).abs() < 1e-9);
}

#[test]
fn reset_draws_fresh_weights() {
    let mut a = trained(GrowthMethod::Reset, 256, 3);
    let keys = memoized(&a);
    let before = values(&mut a, &keys);
    let event = a.force_growth().unwrap();
    assert_eq!(event.residual, None);
    assert_eq!(event.to_dimension, 512);
    let after = values(&mut a, &keys);
    let moved = before.iter().zip(&after).filter(|(x, y)| (*x - *y).abs() > 1e-3).count();
    assert!(moved * 10 >= keys.len() * 9, "{moved} of {} values moved", keys.len());
}

#[test]
fn reset_values_centre_on_bias() {
    let seeds = 300;
    let mean: f64 = (0..seeds)
        .map(|s| {
            let mut a = trained(GrowthMethod::Reset, 128, s);
            a.force_growth().unwrap();
            let key = a.state_key(0);
            a.value_of(&key).unwrap()
        })
        .sum::<f64>()
        / seeds as f64;
    // each value is 1 + N(0, ~1)
    assert!((mean - 1.0).abs() < 0.2, "mean value {mean}");
}

#[test]
fn growth_keeps_trace_and_atoms_consistent() {
    let mut a = trained(GrowthMethod::Transfer, 128, 4);
    a.force_growth().unwrap();
    assert_eq!(a.trace().dimension(), a.dimension());
    assert!(a.trace().is_clear());
    for k in memoized(&a) {
        for s in k {
            assert_eq!(a.ledger().atom(s).unwrap().len(), a.dimension());
        }
    }
}

#[test]
fn min_norm_solution_matches_normal_equations() {
    let (m, n) = (30, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows: Vec<Hrr64> = (0..m).map(|_| Hrr64::random(n, &mut rng).unwrap()).collect();
    let refs: Vec<&Hrr64> = rows.iter().collect();
    let b: Vec<f64> = (0..m).map(|i| (i as f64 * 0.37).sin()).collect();
    let sol = stack_and_solve(&refs, &b).unwrap();

    // w = Aᵀ (A Aᵀ)⁻¹ b
    let a = DMatrix::from_fn(m, n, |i, j| rows[i].as_slice()[j]);
    let gram = &a * a.transpose();
    let y = gram.cholesky().unwrap().solve(&DVector::from_vec(b.clone()));
    let oracle = a.transpose() * y;
    for (x, y) in sol.weights.as_slice().iter().zip(oracle.iter()) {
        assert!((x - y).abs() < 1e-8);
    }
    assert_eq!(sol.rank, m);
    assert!(sol.residual < 1e-9);
}

#[test]
fn overdetermined_solve_is_least_squares() {
    let (m, n) = (40, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rows: Vec<Hrr64> = (0..m).map(|_| Hrr64::random(n, &mut rng).unwrap()).collect();
    let refs: Vec<&Hrr64> = rows.iter().collect();
    let b: Vec<f64> = (0..m).map(|i| i as f64 / m as f64).collect();
    let sol = stack_and_solve(&refs, &b).unwrap();

    let a = DMatrix::from_fn(m, n, |i, j| rows[i].as_slice()[j]);
    let oracle = (a.transpose() * &a)
        .cholesky()
        .unwrap()
        .solve(&(a.transpose() * DVector::from_vec(b)));
    for (x, y) in sol.weights.as_slice().iter().zip(oracle.iter()) {
        assert!((x - y).abs() < 1e-8);
    }
    assert!(sol.residual > 1e-3);
}

#[test]
fn static_count_mode_never_grows() {
    let mut c = ExperimentConfig::preset("no-static-desk").unwrap();
    c.agent.hrr_length = 64;
    c.agent.atr_alpha = 0.5;
    c.episodes = 300;
    assert_eq!(c.agent.atr_count_mode, AtrCountMode::Static);
    let r = run_seed(&c, 0).unwrap();
    assert_eq!(r.growth_events(), 0);
    assert_eq!(r.final_dimension, 64);
    assert_eq!(r.final_atrs, c.agent.atrs);
}

#[test]
fn dynamic_count_mode_grows_by_the_rule() {
    let mut c = ExperimentConfig::preset("no-static-desk").unwrap();
    c.agent.hrr_length = 32;
    c.agent.atrs = 1;
    c.agent.atr_alpha = 0.5;
    c.agent.atr_count_mode = AtrCountMode::Dynamic;
    c.agent.growth_method = GrowthMethod::Transfer;
    c.episodes = 40;
    let r = run_seed(&c, 0).unwrap();
    let events: Vec<_> = r.episodes.iter().flat_map(|e| &e.growths).collect();
    assert!(!events.is_empty());
    let mut n = 32;
    for (i, g) in events.iter().enumerate() {
        assert_eq!(g.atr_count, i + 2);
        assert_eq!(g.from_dimension, n);
        n = grow_dimension(n, g.atr_count).unwrap();
        assert_eq!(g.to_dimension, n);
    }
    assert_eq!(r.final_dimension, n);
    assert_eq!(r.final_atrs, events.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn grown_dimension_is_rounded_ratio(n in 1usize..100_000, k in 2usize..50) {
        let g = grow_dimension(n, k).unwrap();
        let exact = (k * n) as f64 / (k - 1) as f64;
        prop_assert!((g as f64 - exact).abs() <= 0.5);
        prop_assert!(g > n);
    }
}
