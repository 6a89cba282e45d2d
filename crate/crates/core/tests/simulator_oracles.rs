use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use svelab::grid::TimeGrid;
use svelab::kernel::Kernel;
use svelab::simulator::*;
use svelab::spectral::{compute_gg, DiagonalOperator, ForcingSpec, KernelPair};
use svelab::Error;

fn ou(mu: f64, sigma: f64, x0: f64, horizon: f64, weights: NoiseWeights) -> SveProblem {
    let mut p = SveProblem::scalar_additive(-mu, 1.0, 1.0, sigma, 0.0, x0, horizon).unwrap();
    p.noise_weights = weights;
    p
}

fn heat(modes: usize, alpha: f64, beta: f64, horizon: f64) -> SveProblem {
    SveProblem {
        operator: DiagonalOperator::dirichlet_laplacian(1, modes).unwrap(),
        kernels: KernelPair::fractional(alpha, beta),
        drift: Drift::Zero,
        diffusion: Diffusion::Additive { sigma0: vec![1.0; modes] },
        forcing: ForcingSpec::Power { gamma: 0.0, state: (1..=modes).map(|n| 1.0 / n as f64).collect() },
        horizon,
        scheme: Scheme::EulerLeft,
        noise_weights: NoiseWeights::MomentMatched,
    }
}

#[test]
fn deterministic_problem_reproduces_forced_term() {
    let mut p = heat(4, 0.6, 1.0, 2.0);
    p.diffusion = Diffusion::Zero;
    let grid = TimeGrid::uniform(2.0, 40).unwrap();
    let path = simulate_path(&p, &grid, 0, 7).unwrap();
    let gg = compute_gg(&p.operator, &p.forcing, &p.kernels.k, &grid).unwrap();
    for (i, s) in path.states.iter().enumerate() {
        for n in 0..4 {
            assert_eq!(s[n], gg.values[n][i]);
        }
    }
}

#[test]
fn left_point_scheme_is_exponential_euler_for_ou() {
    let (mu, sigma, x0, h) = (1.3, 0.7, 2.0, 0.01);
    let grid = TimeGrid::uniform(3.0, 300).unwrap();
    let path = Simulator::new(&ou(mu, sigma, x0, 3.0, NoiseWeights::LeftPoint), &grid)
        .unwrap()
        .path(Lineage::new(11, 3, NS_PATHS))
        .unwrap();
    let decay = (-mu * h).exp();
    let mut u = x0;
    for (i, s) in path.states.iter().enumerate() {
        assert!((s[0] - u).abs() <= 1e-12 * u.abs().max(1.0), "node {i}: {} vs {u}", s[0]);
        if i < path.increments.len() {
            u = decay * (u + sigma * path.increments[i][0]);
        }
    }
}

#[test]
fn moment_matched_scheme_is_exact_ou_discretization() {
    let (mu, sigma, x0, h) = (0.8, 1.1, -1.0, 0.02);
    let grid = TimeGrid::uniform(4.0, 200).unwrap();
    let path = Simulator::new(&ou(mu, sigma, x0, 4.0, NoiseWeights::MomentMatched), &grid)
        .unwrap()
        .path(Lineage::new(5, 0, NS_PATHS))
        .unwrap();
    let decay = (-mu * h).exp();
    let gain = ((1.0 - (-2.0 * mu * h).exp()) / (2.0 * mu * h)).sqrt();
    let mut u = x0;
    for (i, s) in path.states.iter().enumerate() {
        assert!((s[0] - u).abs() <= 1e-10, "node {i}: {} vs {u}", s[0]);
        if i < path.increments.len() {
            u = decay * u + sigma * gain * path.increments[i][0];
        }
    }
}

#[test]
fn strong_error_decays_at_first_order() {
    // Reference: exponential Euler on a 2^-12 grid; coarse increments are
    // sums of fine ones.
    let (horizon, fine_steps, paths) = (1.0, 4096usize, 150u64);
    let levels = [16usize, 32, 64, 128];
    let mut sq = [0.0f64; 4];
    let sims: Vec<Simulator> = levels
        .iter()
        .map(|&n| Simulator::new(&ou(1.0, 1.0, 1.0, horizon, NoiseWeights::LeftPoint), &TimeGrid::uniform(horizon, n).unwrap()).unwrap())
        .collect();
    for p in 0..paths {
        let hf = horizon / fine_steps as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(99 + p);
        let dw: Vec<Vec<f64>> = (0..fine_steps).map(|_| vec![hf.sqrt() * rng.sample::<f64, _>(StandardNormal)]).collect();
        let mut u = 1.0;
        for d in &dw {
            u = (-hf).exp() * (u + d[0]);
        }
        for (l, &n) in levels.iter().enumerate() {
            let r = fine_steps / n;
            let coarse: Vec<Vec<f64>> = dw.chunks(r).map(|c| vec![c.iter().map(|d| d[0]).sum()]).collect();
            let path = sims[l].path_with_increments(&coarse).unwrap();
            sq[l] += (path.states[n][0] - u).powi(2);
        }
    }
    let err: Vec<f64> = sq.iter().map(|s| (s / paths as f64).sqrt()).collect();
    let x: Vec<f64> = levels.iter().map(|&n| (horizon / n as f64).ln()).collect();
    let y: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let (slope, _) = svelab::stats::linear_fit(&x, &y);
    assert!(slope >= 0.9, "order {slope}, errors {err:?}");
}

#[test]
fn ensemble_is_deterministic_across_workers_and_matches_single_path() {
    let p = heat(6, 0.7, 1.0, 1.0);
    let grid = TimeGrid::uniform(1.0, 50).unwrap();
    let sim = Simulator::new(&p, &grid).unwrap();
    let times = [0.0, 0.5, 1.0];
    let a = sim.ensemble(40, &times, 3, NS_PATHS, 1).unwrap();
    let b = sim.ensemble(40, &times, 3, NS_PATHS, 3).unwrap();
    assert_eq!(a, b);
    let path = sim.path(Lineage::new(3, 17, NS_PATHS)).unwrap();
    for (r, &i) in [0usize, 25, 50].iter().enumerate() {
        for n in 0..6 {
            assert_eq!(a[r].values[n][17], path.states[i][n]);
        }
    }
}

#[test]
fn nonlinear_ensemble_is_deterministic_across_workers() {
    let mut p = heat(5, 0.9, 1.1, 1.0);
    p.drift = Drift::Pointwise { map: ScalarMap::Sine { amplitude: 0.5, frequency: 1.0, phase: 0.0 } };
    p.diffusion = Diffusion::Pointwise { map: ScalarMap::Tanh { amplitude: 0.3, scale: 1.0 } };
    let grid = TimeGrid::uniform(1.0, 40).unwrap();
    let sim = Simulator::new(&p, &grid).unwrap();
    let a = sim.ensemble(12, &[1.0], 8, NS_PATHS, 1).unwrap();
    let b = sim.ensemble(12, &[1.0], 8, NS_PATHS, 4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_noise_ensemble_has_no_spread() {
    let mut p = heat(3, 0.5, 1.0, 1.0);
    p.diffusion = Diffusion::Additive { sigma0: vec![0.0; 3] };
    let grid = TimeGrid::uniform(1.0, 20).unwrap();
    let sim = Simulator::new(&p, &grid).unwrap();
    let e = sim.ensemble(10, &[0.5, 1.0], 1, NS_PATHS, 0).unwrap();
    for (r, i) in [10usize, 20].iter().enumerate() {
        for n in 0..3 {
            assert!(e[r].mode(n).iter().all(|v| *v == sim.forced_term()[n][*i]));
            assert!(e[r].variance(n) < 1e-30);
        }
    }
}

#[test]
fn collocation_reduces_to_modewise_coefficients() {
    let grid = TimeGrid::uniform(0.5, 25).unwrap();
    let mut additive = heat(8, 0.8, 1.0, 0.5);
    additive.drift = Drift::Linear { slope: -0.4 };
    let mut pointwise = additive.clone();
    pointwise.drift = Drift::Pointwise { map: ScalarMap::Affine { slope: -0.4, offset: 0.0 } };
    pointwise.diffusion = Diffusion::Pointwise { map: ScalarMap::Affine { slope: 0.0, offset: 1.0 } };
    let a = simulate_path(&additive, &grid, 2, 4).unwrap();
    let b = simulate_path(&pointwise, &grid, 2, 4).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        for (u, v) in x.iter().zip(y) {
            assert!((u - v).abs() < 1e-11, "{u} vs {v}");
        }
    }
}

#[test]
fn exact_gaussian_moments_match_ou() {
    let mut p = ou(1.0, 1.0, 3.0, 1.0, NoiseWeights::MomentMatched);
    p.scheme = Scheme::ExactGaussian;
    let m = exact_gaussian_moments(&p, &[0.0, 1.0, 60.0]).unwrap();
    assert_eq!(m[0].0[0], 3.0);
    assert_eq!(m[0].1[0], 0.0);
    assert!((m[1].0[0] - 3.0 * (-1.0f64).exp()).abs() < 1e-13);
    assert!((m[1].1[0] - 0.5 * (1.0 - (-2.0f64).exp())).abs() < 1e-10);
    assert!((m[2].1[0] - 0.5).abs() < 1e-10);

    let mut hp = heat(8, 1.0, 1.0, 1.0);
    hp.scheme = Scheme::ExactGaussian;
    let m = exact_gaussian_moments(&hp, &[40.0]).unwrap();
    for n in 1..=8 {
        let want = 1.0 / (2.0 * (n * n) as f64);
        assert!((m[0].1[n - 1] - want).abs() < 1e-10 * want, "mode {n}");
    }
    let s = sample_exact_gaussian(&hp, &[0.0], 5, 1).unwrap();
    assert!(s[0].values.iter().enumerate().all(|(n, v)| v.iter().all(|x| *x == 1.0 / (n + 1) as f64)));
}

#[test]
fn linear_drift_folds_into_operator_for_exact_sampling() {
    let mut p = ou(2.0, 1.0, 1.0, 1.0, NoiseWeights::MomentMatched);
    p.drift = Drift::Linear { slope: 1.0 };
    p.scheme = Scheme::ExactGaussian;
    let m = exact_gaussian_moments(&p, &[50.0]).unwrap();
    assert!((m[0].1[0] - 0.5).abs() < 1e-10);
    p.drift = Drift::Linear { slope: 3.0 };
    assert!(p.validate().is_err());
}

#[test]
fn restart_at_zero_returns_forced_term() {
    let p = heat(3, 0.7, 1.0, 1.0);
    let grid = TimeGrid::uniform(1.0, 20).unwrap();
    let sim = Simulator::new(&p, &grid).unwrap();
    let path = sim.path(Lineage::new(1, 0, NS_PATHS)).unwrap();
    match sim.restart_forcing(&path, 0.0).unwrap() {
        ForcingSpec::Resolved { modes, .. } => {
            for n in 0..3 {
                assert_eq!(modes[n].values, sim.forced_term()[n]);
            }
        }
        _ => panic!("expected resolved forcing"),
    }
}

#[test]
fn restart_of_deterministic_problem_shifts_forced_term() {
    let mut p = heat(2, 0.6, 1.0, 2.0);
    p.diffusion = Diffusion::Zero;
    let grid = TimeGrid::uniform(2.0, 40).unwrap();
    let sim = Simulator::new(&p, &grid).unwrap();
    let path = sim.path(Lineage::new(1, 0, NS_PATHS)).unwrap();
    let ForcingSpec::Resolved { modes, .. } = sim.restart_forcing(&path, 0.5).unwrap() else { panic!() };
    for n in 0..2 {
        for i in 0..modes[n].values.len() {
            assert_eq!(modes[n].values[i], sim.forced_term()[n][i + 10]);
        }
    }
}

#[test]
fn restarted_forcing_starts_at_the_realized_state() {
    let mut p = heat(4, 0.8, 1.0, 1.0);
    p.drift = Drift::Modewise { map: ScalarMap::Sine { amplitude: 1.0, frequency: 2.0, phase: 0.3 } };
    p.diffusion = Diffusion::DiagonalMultiplicative { map: ScalarMap::Tanh { amplitude: 0.5, scale: 1.0 } };
    let grid = TimeGrid::uniform(1.0, 40).unwrap();
    let sim = Simulator::new(&p, &grid).unwrap();
    let path = sim.path(Lineage::new(2, 5, NS_PATHS)).unwrap();
    let ForcingSpec::Resolved { modes, .. } = restart_forcing(&p, &path, 0.25).unwrap() else { panic!() };
    for n in 0..4 {
        assert!((modes[n].values[0] - path.states[10][n]).abs() < 1e-14);
    }
    assert!(sim.restart_forcing(&path, 1.5).is_err());
}

#[test]
fn restarted_law_has_the_shifted_moments() {
    let p = ou(1.0, 1.0, 2.0, 3.0, NoiseWeights::MomentMatched);
    let grid = TimeGrid::uniform(3.0, 150).unwrap();
    let sim = Simulator::new(&p, &grid).unwrap();
    let (direct, restarted) = sim.restart_experiment(1.0, 2.0, 3000, 17, 0).unwrap();
    let want_mean = 2.0 * (-3.0f64).exp();
    let want_var = 0.5 * (1.0 - (-6.0f64).exp());
    for e in [&direct, &restarted] {
        assert!((e.mean(0) - want_mean).abs() < 4.0 * e.stderr_mean(0), "{}", e.mean(0));
        assert!((e.variance(0) - want_var).abs() < 4.0 * e.stderr_variance(0), "{}", e.variance(0));
    }
    assert_ne!(direct.values, restarted.values);
}

#[test]
fn validation_names_the_broken_requirement() {
    let mut p = heat(2, 0.8, 0.4, 1.0);
    p.diffusion = Diffusion::Additive { sigma0: vec![1.0] };
    p.drift = Drift::Pointwise { map: ScalarMap::Clamp { lo: -1.0, hi: 1.0 } };
    p.operator = DiagonalOperator::explicit(vec![1.0, 2.0]).unwrap();
    let Err(Error::Validation(msgs)) = p.validate() else { panic!() };
    assert!(msgs.iter().any(|m| m.contains("beta > 1/2")), "{msgs:?}");
    assert!(msgs.iter().any(|m| m.contains("sigma0")));
    assert!(msgs.iter().any(|m| m.contains("pointwise drift")));

    let mut q = heat(2, 0.8, 1.0, 1.0);
    q.scheme = Scheme::ExactGaussian;
    q.diffusion = Diffusion::DiagonalMultiplicative { map: ScalarMap::Tanh { amplitude: 1.0, scale: 1.0 } };
    assert!(q.validate().is_err());
    q.diffusion = Diffusion::Additive { sigma0: vec![1.0, 1.0] };
    q.kernels.k = Kernel::Log1pInverse;
    assert!(q.validate().is_err());
}

#[test]
fn blow_up_is_reported_with_node() {
    let mut p = ou(1.0, 0.0, 1.0, 40.0, NoiseWeights::LeftPoint);
    p.drift = Drift::Linear { slope: 400.0 };
    let grid = TimeGrid::uniform(40.0, 400).unwrap();
    match simulate_path(&p, &grid, 0, 0) {
        Err(Error::NonFinite { node, .. }) => assert!(node > 0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn problem_json_round_trip_is_strict() {
    let p = heat(2, 0.8, 1.0, 1.0);
    let s = serde_json::to_string(&p).unwrap();
    let back: SveProblem = serde_json::from_str(&s).unwrap();
    assert_eq!(back, p);
    let mut v: serde_json::Value = serde_json::from_str(&s).unwrap();
    v["surprise"] = serde_json::json!(1);
    assert!(serde_json::from_value::<SveProblem>(v).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn identical_lineage_is_bit_identical(seed in any::<u64>(), idx in 0u64..1000, alpha in 0.4f64..1.6) {
        let mut p = heat(3, alpha, 1.0, 0.5);
        p.drift = Drift::Modewise { map: ScalarMap::Tanh { amplitude: 1.0, scale: 0.5 } };
        let grid = TimeGrid::uniform(0.5, 20).unwrap();
        let a = simulate_path(&p, &grid, idx, seed).unwrap();
        let b = simulate_path(&p, &grid, idx, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
