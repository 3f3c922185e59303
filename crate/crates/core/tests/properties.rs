use nalgebra::{DMatrix, DVector};
use netloc_core::estimation::{self, InformationState};
use netloc_core::joint::{predict_asymptotic_mse, regularized_estimate};
use netloc_core::localization::{blue_estimate, EdgeAverager, JacobiOptions, LocalizationState, Localizer};
use netloc_core::models::{sample_round, LinearGaussian};
use netloc_core::network::{
    consensus_weights, jacobi_spectral_radius, laplacian_set, random_geometric, random_spd, SensorNetwork, WeightRule,
};
use netloc_core::sim::{self, Scenario};
use netloc_core::{linalg, SimRng};
use proptest::prelude::*;
use rand::SeedableRng;

fn network(seed: u64, n: usize, d: usize) -> SensorNetwork {
    let mut rng = SimRng::seed_from_u64(seed);
    let layout = random_geometric(n, 60.0, 100.0, &mut rng).unwrap();
    let cov = (0..layout.edges.len()).map(|_| random_spd(d, 0.2, 2.0, &mut rng)).collect();
    let positions = layout
        .positions
        .into_iter()
        .map(|p| DVector::from_fn(d, |k, _| if k < 2 { p[k] } else { 0.5 * p[0] - p[1] }))
        .collect();
    SensorNetwork::new(positions, &layout.edges, cov).unwrap()
}

fn rule(lazy: bool) -> WeightRule {
    if lazy {
        WeightRule::LazyUniform
    } else {
        WeightRule::Metropolis
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reduced_laplacian_is_pd_and_jacobi_contracts(seed in any::<u64>(), n in 2usize..30, d in 1usize..4) {
        let net = network(seed, n, d);
        let lap = laplacian_set(&net);
        prop_assert!(linalg::is_spd(&lap.reduced_laplacian));
        let rho = jacobi_spectral_radius(&net).unwrap();
        prop_assert!(rho < 1.0, "rho = {}", rho);
    }

    #[test]
    fn laplacian_annihilates_constant_blocks(seed in any::<u64>(), n in 2usize..30, d in 1usize..4) {
        let net = network(seed, n, d);
        let lap = laplacian_set(&net);
        let v = DVector::from_fn(d, |k, _| 1.0 + k as f64);
        let ones = linalg::stack(&vec![v; n]);
        prop_assert!((&lap.laplacian * ones).amax() < 1e-9);
    }

    #[test]
    fn weights_are_row_stochastic_on_closed_neighborhoods(seed in any::<u64>(), n in 2usize..30, lazy in any::<bool>()) {
        let net = network(seed, n, 2);
        let w = consensus_weights(&net, rule(lazy)).unwrap();
        let k = w.matrix();
        for i in 0..n {
            prop_assert!((k.row(i).sum() - 1.0).abs() < 1e-12);
            for j in 0..n {
                prop_assert!(k[(i, j)] >= 0.0);
                if i != j && net.edge_index(i, j).is_none() {
                    prop_assert_eq!(k[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn consensus_powers_approach_stationary_rows(seed in any::<u64>(), n in 2usize..20, lazy in any::<bool>()) {
        let net = network(seed, n, 2);
        let w = consensus_weights(&net, rule(lazy)).unwrap();
        let pi = w.stationary_distribution().unwrap();
        prop_assert!((pi.sum() - 1.0).abs() < 1e-10);
        let mut p = w.matrix().clone();
        for _ in 0..14 {
            p = &p * &p;
        }
        let limit = DVector::from_element(n, 1.0) * pi.transpose();
        prop_assert!((p - limit).amax() < 1e-8);
    }

    #[test]
    fn running_sigma_equals_batch_average(seed in any::<u64>(), n in 2usize..15, rounds in 1usize..12) {
        let net = network(seed, n, 2);
        let loc = Localizer::new(&net, JacobiOptions::default()).unwrap();
        let mut rng = SimRng::seed_from_u64(seed ^ 0x5eed);
        let mut state = LocalizationState::zeros(&net);
        let mut sum = vec![DVector::zeros(2); n];
        for t in 0..rounds {
            let round = sample_round(&net, t, &mut rng);
            for (s, c) in sum.iter_mut().zip(loc.round_terms(&net, &round).unwrap()) {
                *s += c;
            }
            state = loc.step(&net, &state, &round).unwrap();
        }
        for (s, b) in state.sigma.iter().zip(&sum) {
            prop_assert!((s - b / rounds as f64).amax() < 1e-9 * (1.0 + b.amax()));
        }
    }

    #[test]
    fn estimates_are_translation_invariant(seed in any::<u64>(), n in 2usize..15, dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
        let net = network(seed, n, 2);
        let shift = DVector::from_vec(vec![dx, dy]);
        let moved = SensorNetwork::new(
            net.positions().iter().map(|p| p + &shift).collect(),
            &net.edge_pairs(),
            net.edges().iter().map(|e| e.covariance().clone()).collect(),
        ).unwrap();
        let run = |net: &SensorNetwork| {
            let loc = Localizer::new(net, JacobiOptions::default()).unwrap();
            let mut rng = SimRng::seed_from_u64(seed);
            let mut state = LocalizationState::zeros(net);
            for t in 0..20 {
                state = loc.step(net, &state, &sample_round(net, t, &mut rng)).unwrap();
            }
            state.reduced()
        };
        prop_assert!((run(&net) - run(&moved)).amax() < 1e-8);
    }

    #[test]
    fn predicted_mse_is_monotone_and_quadratic(seed in any::<u64>(), d in 1usize..5, m in 1usize..6) {
        let mut rng = SimRng::seed_from_u64(seed);
        let infos: Vec<_> = (0..m).map(|_| random_spd(d, 0.5, 2.0, &mut rng)).collect();
        let pi = DVector::from_element(m, 1.0 / m as f64);
        let y = linalg::standard_normal(d, &mut rng);
        let deltas = [1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0];
        let mse: Vec<f64> = deltas.iter().map(|&dl| predict_asymptotic_mse(&pi, &infos, dl, &y).unwrap()).collect();
        prop_assert!(mse.windows(2).all(|w| w[0] <= w[1]));
        let c = estimation::information_limit(&pi, &infos).unwrap();
        let cinv_y = linalg::spd_solve(&c, &y).unwrap();
        let ratio = mse[0] / (1e-8 * cinv_y.norm_squared());
        prop_assert!((ratio - 1.0).abs() < 0.01, "ratio {}", ratio);
    }

    #[test]
    fn vanishing_delta_recovers_plain_estimate(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = SimRng::seed_from_u64(seed);
        let h = DMatrix::from_fn(d, d, |_, _| linalg::standard_normal(1, &mut rng)[0]) + DMatrix::identity(d, d) * 3.0;
        let lg = LinearGaussian::new(h, random_spd(d, 0.5, 1.5, &mut rng)).unwrap();
        let y = linalg::standard_normal(d, &mut rng);
        let mut state = InformationState::weak_prior(d, 1e-9);
        for _ in 0..100 {
            let z = lg.sample(&y, &mut rng).unwrap();
            state = estimation::update(&[(1.0, &state)], Some((&lg, &z))).unwrap();
            let plain = state.estimate().unwrap();
            let reg = regularized_estimate(&state, 1e-12).unwrap();
            prop_assert!((&plain - &reg).amax() < 1e-6 * (1.0 + plain.amax()));
        }
    }
}

const SMALL_STATIC: &str = r#"
kind = "static-field"
horizon = 40
replicates = 6
seed = 3
record_every = 10
[network]
generator = "random_geometric"
nodes = 8
radius = 60.0
[static_target]
dim = 3
"#;

const SMALL_LOC: &str = r#"
kind = "localization-only"
horizon = 15
replicates = 5
seed = 8
[network]
generator = "random_geometric"
nodes = 12
radius = 50.0
[localization]
init = { kind = "prior", std = 2.0 }
"#;

#[test]
fn repeated_runs_are_bit_identical() {
    for text in [SMALL_STATIC, SMALL_LOC] {
        let s = Scenario::from_toml_str(text).unwrap();
        assert_eq!(sim::run_scenario(&s).unwrap(), sim::run_scenario(&s).unwrap());
    }
}

#[test]
fn seed_order_does_not_change_aggregate() {
    for text in [SMALL_STATIC, SMALL_LOC] {
        let s = Scenario::from_toml_str(text).unwrap();
        let seeds: Vec<u64> = (0..s.replicates as u64).map(|k| s.seed + k).collect();
        let mut rev = seeds.clone();
        rev.reverse();
        rev.swap(0, 2);
        let a = sim::run_replicates(&s, &seeds).unwrap().metrics;
        let b = sim::run_replicates(&s, &rev).unwrap().metrics;
        assert_eq!(a, b);
    }
}

#[test]
fn single_round_blue_is_unbiased() {
    let net = network(17, 10, 2);
    let truth = net.relative_positions();
    let draws = 2000;
    let mut rng = SimRng::seed_from_u64(99);
    let mut sum = DVector::zeros(2 * (net.node_count() - 1));
    let mut sq = sum.clone();
    for t in 0..draws {
        let mut avg = EdgeAverager::new(&net);
        avg.add(&net, &sample_round(&net, t, &mut rng)).unwrap();
        let err = linalg::stack(&blue_estimate(&net, &avg.means()).unwrap()[1..]) - linalg::stack(&truth[1..]);
        sq += err.component_mul(&err);
        sum += err;
    }
    let mean = sum / draws as f64;
    for k in 0..mean.len() {
        let sd = (sq[k] / draws as f64 - mean[k] * mean[k]).sqrt();
        assert!(mean[k].abs() < 5.0 * sd / (draws as f64).sqrt(), "coordinate {k}: mean {} sd {sd}", mean[k]);
    }
}
