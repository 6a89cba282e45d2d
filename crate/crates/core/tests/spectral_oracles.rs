use proptest::prelude::*;
use svelab::grid::{GridFunction, Interpolation, TimeGrid};
use svelab::kernel::{Kernel, SingularityBound};
use svelab::mlf::e_one_closed;
use svelab::spectral::*;
use svelab::Error;

fn laplace1(m: usize) -> DiagonalOperator {
    DiagonalOperator::dirichlet_laplacian(1, m).unwrap()
}

#[test]
fn heat_semigroup_components() {
    let op = laplace1(6);
    let x: Vec<f64> = (1..=6).map(|n| 1.0 / n as f64).collect();
    let y = apply_resolvent(&op, &KernelPair::fractional(1.0, 1.0), KernelRole::K, 1.0, &x).unwrap();
    for n in 1..=6 {
        let want = x[n - 1] * (-((n * n) as f64)).exp();
        assert!((y[n - 1] - want).abs() <= 1e-14 * want.abs().max(1e-300), "n={n}");
    }
}

#[test]
fn constant_kernel_at_time_zero_is_identity() {
    let op = laplace1(4);
    let x = vec![0.3, -1.0, 2.0, 0.5];
    let y = apply_resolvent(&op, &KernelPair::fractional(1.0, 1.0), KernelRole::K, 0.0, &x).unwrap();
    assert_eq!(y, x);
}

/// erfc from the Maclaurin series of erf; accurate to ~1e-15 for z ≤ 2.
fn erfc(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        n += 1.0;
        term *= -z * z / n;
        sum += term / (2.0 * n + 1.0);
    }
    1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
}

#[test]
fn half_order_matches_erfc_representation() {
    // E_{1/2,1/2}(-z) = 1/√π - z e^{z²} erfc(z)
    let op = DiagonalOperator::explicit(vec![0.5, 1.0, 2.0, 4.0]).unwrap();
    let x = vec![1.0; 4];
    for &t in &[0.01, 0.05, 0.1, 0.25] {
        let y = apply_resolvent(&op, &KernelPair::fractional(0.5, 0.5), KernelRole::K, t, &x).unwrap();
        for (i, &mu) in op.eigenvalues().iter().enumerate() {
            let z: f64 = mu * t.sqrt();
            let ml = 1.0 / std::f64::consts::PI.sqrt() - z * (z * z).exp() * erfc(z);
            let want = ml / t.sqrt();
            assert!((y[i] - want).abs() < 1e-11 * want.abs().max(1.0), "t={t} mu={mu}");
        }
    }
}

#[test]
fn dimension_mismatch_is_reported() {
    let op = laplace1(3);
    let r = apply_resolvent(&op, &KernelPair::fractional(0.5, 0.5), KernelRole::K, 1.0, &[1.0]);
    assert!(matches!(r, Err(Error::DimensionMismatch { expected: 3, got: 1 })));
}

#[test]
fn first_mode_case_is_one_for_unit_mu1() {
    let op = laplace1(50);
    let b = operator_norm_series(&op, 0.5, 0.5, 1.0, 0.0, 0.0, NormCase::FirstMode).unwrap();
    assert!((b.value - 1.0).abs() < 1e-7, "{b:?}");
}

#[test]
fn stronger_source_space_gives_smaller_terms() {
    let op = laplace1(40);
    let a = operator_norm_series(&op, 0.8, 0.9, 2.0, 0.2, 0.2, NormCase::Operator).unwrap();
    let b = operator_norm_series(&op, 0.8, 0.9, 2.0, 1.2, 0.2, NormCase::Operator).unwrap();
    assert!(b.exponent < a.exponent);
    for &mu in op.eigenvalues() {
        assert!(mu.powf(b.exponent) <= mu.powf(a.exponent));
    }
    assert!(b.value <= a.value);
}

#[test]
fn drift_series_finite_below_threshold_and_divergent_at_it() {
    // α = β = 1, q = 2, L(H, H^δ): threshold δ = 3/4 - 1/(2α) = 1/4
    let op = laplace1(200);
    let ok = operator_norm_series(&op, 1.0, 1.0, 2.0, 0.0, 0.2, NormCase::Operator).unwrap();
    assert!(ok.value.is_finite() && ok.tail_bound.unwrap().is_finite());
    let at = operator_norm_series(&op, 1.0, 1.0, 2.0, 0.0, 0.25, NormCase::Operator);
    assert!(matches!(at, Err(Error::Divergent { .. })), "{at:?}");
}

#[test]
fn hilbert_schmidt_heat_case() {
    // α = β = 1: ∫ Σ e^{-2 n² t} dt = Σ 1/(2 n²) → π²/12
    let op = laplace1(400);
    let b = operator_norm_series(&op, 1.0, 1.0, 2.0, 0.0, 0.0, NormCase::HilbertSchmidt).unwrap();
    let exact = std::f64::consts::PI.powi(2) / 12.0;
    assert!(b.value <= exact && exact <= b.upper() + 1e-12, "{b:?}");
}

#[test]
fn cm_bounds_plug_in() {
    let op = DiagonalOperator::explicit(vec![3.0, 5.0, 8.0]).unwrap();
    let k = Kernel::Log1pInverse;
    let b = operator_norm_series_cm(&op, &k, 1.0, CmTarget::OperatorH, 1.0, None).unwrap();
    assert!((b.value - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(b.constant, 1.0);

    let unit = DiagonalOperator::explicit(vec![1.0, 4.0]).unwrap();
    let ek = Kernel::ExponentialMixture { components: vec![(1.0, 1.0)] };
    let sb = SingularityBound { delta: 0.25, c_delta: 1.0 };
    let b = operator_norm_series_cm(&unit, &ek, 2.0, CmTarget::OperatorH, 1.0, Some(sb)).unwrap();
    assert!((b.value - 2.0).abs() < 1e-14, "{b:?}");
}

#[test]
fn cm_bound_rejects_false_singularity_bound() {
    let op = laplace1(4);
    let sb = SingularityBound { delta: 0.25, c_delta: 1.0 };
    let r = operator_norm_series_cm(&op, &Kernel::Log1pInverse, 2.0, CmTarget::OperatorH, 1.0, Some(sb));
    assert!(matches!(r, Err(Error::Hypothesis(_))));
}

#[test]
fn constant_forcing_gives_e_one_and_decays() {
    let op = laplace1(3);
    let forcing = ForcingSpec::Power { gamma: 0.0, state: vec![1.0, 2.0, -1.0] };
    let k = Kernel::Fractional { alpha: 0.7 };
    let g = TimeGrid::uniform(50.0, 100).unwrap();
    let gg = compute_gg(&op, &forcing, &k, &g).unwrap();
    for (n, &mu) in op.eigenvalues().iter().enumerate() {
        for (i, &t) in g.nodes().iter().enumerate() {
            let want = [1.0, 2.0, -1.0][n] * e_one_closed(t, mu, 0.7).unwrap();
            assert!((gg.values[n][i] - want).abs() < 1e-13);
        }
    }
    assert_eq!(gg_limit(&op, &forcing, &k).unwrap(), vec![0.0; 3]);
    let far = TimeGrid::from_nodes(vec![0.0, 1e6]).unwrap();
    let gg = compute_gg(&op, &forcing, &k, &far).unwrap();
    for (n, &mu) in op.eigenvalues().iter().enumerate() {
        let env = 2.0 / (mu * 1e6f64.powf(0.7) * statrs::function::gamma::gamma(0.3));
        assert!(gg.last()[n].abs() < env * [1.0, 2.0, 1.0][n]);
    }
}

#[test]
fn zero_operator_limit_returns_forcing() {
    let op = DiagonalOperator::explicit(vec![1e-14]).unwrap();
    let k = Kernel::Fractional { alpha: 0.6 };
    let g = TimeGrid::uniform(2.0, 20).unwrap();
    let gg = compute_gg(&op, &ForcingSpec::Power { gamma: 0.4, state: vec![1.0] }, &k, &g).unwrap();
    for (i, &t) in g.nodes().iter().enumerate() {
        let want = t.powf(0.4) / statrs::function::gamma::gamma(1.4);
        assert!((gg.values[0][i] - want).abs() < 1e-10);
    }
}

#[test]
fn gamma_equal_alpha_tends_to_inverse_operator() {
    let alpha = 0.6;
    let op = DiagonalOperator::explicit(vec![1.0, 4.0]).unwrap();
    let forcing = ForcingSpec::Power { gamma: alpha, state: vec![1.0, 1.0] };
    let k = Kernel::Fractional { alpha };
    let lim = gg_limit(&op, &forcing, &k).unwrap();
    assert_eq!(lim, vec![1.0, 0.25]);
    let t = 1e8;
    let g = TimeGrid::from_nodes(vec![0.0, t]).unwrap();
    let gg = compute_gg(&op, &forcing, &k, &g).unwrap();
    // envelope: t^{-α}/(μ² Γ(1-α)) leading correction
    for n in 0..2 {
        let mu = op.eigenvalues()[n];
        let env = 2.0 * t.powf(-alpha) / (mu * mu * statrs::function::gamma::gamma(1.0 - alpha));
        assert!((gg.last()[n] - lim[n]).abs() < env, "n={n}");
    }
}

#[test]
fn limits_for_subcritical_power_and_integrable_kernel() {
    let op = DiagonalOperator::explicit(vec![1.0, 9.0]).unwrap();
    let k = Kernel::Fractional { alpha: 0.8 };
    let lim = gg_limit(&op, &ForcingSpec::Power { gamma: 0.4, state: vec![1.0, 1.0] }, &k).unwrap();
    assert_eq!(lim, vec![0.0, 0.0]);

    // k ∈ L¹ with mass m, g = k * g0
    let m = 2.0;
    let ek = Kernel::ExponentialMixture { components: vec![(m * 0.5, 0.5)] };
    let single = DiagonalOperator::explicit(vec![1.5]).unwrap();
    let forcing = ForcingSpec::KernelConvolved { kernel: ek.clone(), g0: ModeSource::Constant { values: vec![3.0] } };
    let lim = gg_limit(&single, &forcing, &ek).unwrap();
    assert!((lim[0] - 3.0 / (1.0 / m + 1.5)).abs() < 1e-15);
    let g = TimeGrid::uniform(60.0, 3000).unwrap();
    let gg = compute_gg(&single, &forcing, &ek, &g).unwrap();
    assert!((gg.last()[0] - lim[0]).abs() < 1e-4, "{} vs {}", gg.last()[0], lim[0]);
}

#[test]
fn power_forcing_outside_range_is_rejected() {
    let op = laplace1(2);
    let k = Kernel::Fractional { alpha: 0.5 };
    let g = TimeGrid::uniform(1.0, 4).unwrap();
    assert!(compute_gg(&op, &ForcingSpec::Power { gamma: 0.7, state: vec![1.0, 1.0] }, &k, &g).is_err());
}

#[test]
fn tabulated_g0_convolution_matches_constant() {
    let op = DiagonalOperator::explicit(vec![2.0]).unwrap();
    let k = Kernel::Fractional { alpha: 0.7 };
    let g = TimeGrid::uniform(5.0, 400).unwrap();
    let tab = GridFunction::new(g.clone(), vec![1.5; g.len()], Interpolation::Linear).unwrap();
    let a = compute_gg(
        &op,
        &ForcingSpec::KernelConvolved { kernel: k.clone(), g0: ModeSource::Tabulated { modes: vec![tab], limit: vec![1.5] } },
        &k,
        &g,
    )
    .unwrap();
    let b = compute_gg(&op, &ForcingSpec::KernelConvolved { kernel: k.clone(), g0: ModeSource::Constant { values: vec![1.5] } }, &k, &g)
        .unwrap();
    for i in 0..g.len() {
        assert!((a.values[0][i] - b.values[0][i]).abs() < 1e-12);
    }
}

#[test]
fn e1_infinity_cases() {
    let op = laplace1(5);
    assert_eq!(e1_infinity(&op, &Kernel::Fractional { alpha: 0.5 }), vec![0.0; 5]);
    let unit_mass = Kernel::ExponentialMixture { components: vec![(1.0, 1.0)] };
    let e = e1_infinity(&op, &unit_mass);
    for n in 1..=5 {
        assert!((e[n - 1] - 1.0 / (1.0 + (n * n) as f64)).abs() < 1e-15);
    }
    let tiny = Kernel::ExponentialMixture { components: vec![(1e-12, 1.0)] };
    assert!(e1_infinity(&op, &tiny).iter().all(|v| (v - 1.0).abs() < 1e-9));
}

#[test]
fn operator_serde_round_trip() {
    let op = DiagonalOperator::dirichlet_laplacian(2, 4).unwrap();
    let s = serde_json::to_string(&op).unwrap();
    let back: DiagonalOperator = serde_json::from_str(&s).unwrap();
    assert_eq!(back, op);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn first_mode_carries_the_sup(alpha in 0.2f64..1.0, shift in 0.0f64..0.8, t in 0.01f64..30.0) {
        let op = DiagonalOperator::dirichlet_laplacian(2, 4).unwrap();
        let e = resolvent_values(&op, &KernelPair::fractional(alpha, alpha + shift), KernelRole::H, t).unwrap();
        let sup = e.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!((sup - e[0]).abs() <= 1e-12 * sup.abs());
    }

    #[test]
    fn doubling_truncation_stays_within_tail(d in 1usize..=3, m in 2usize..8, p in -4.0f64..-1.6) {
        let a = DiagonalOperator::dirichlet_laplacian(d, m).unwrap().power_sum(p).unwrap();
        let b = DiagonalOperator::dirichlet_laplacian(d, 2 * m).unwrap().power_sum(p).unwrap();
        prop_assert!(b.0 - a.0 >= 0.0);
        prop_assert!(b.0 - a.0 <= a.1.unwrap());
    }

    #[test]
    fn modes_decouple(x1 in -2.0f64..2.0, x2 in -2.0f64..2.0, gamma in 0.0f64..0.9) {
        let k = Kernel::Fractional { alpha: 0.9 };
        let g = TimeGrid::uniform(3.0, 30).unwrap();
        let both = DiagonalOperator::explicit(vec![1.0, 7.0]).unwrap();
        let joint = compute_gg(&both, &ForcingSpec::Power { gamma, state: vec![x1, x2] }, &k, &g).unwrap();
        for (n, (mu, x)) in [(1.0, x1), (7.0, x2)].into_iter().enumerate() {
            let one = DiagonalOperator::explicit(vec![mu]).unwrap();
            let s = compute_gg(&one, &ForcingSpec::Power { gamma, state: vec![x] }, &k, &g).unwrap();
            prop_assert_eq!(&s.values[0], &joint.values[n]);
        }
    }
}
