use proptest::prelude::*;
use svelab::grid::TimeGrid;
use svelab::kernel::Kernel;
use svelab::mlf::{e_h_closed, e_k_closed};
use svelab::volterra1d::*;

#[test]
fn fractional_resolvent_matches_closed_form() {
    let g = TimeGrid::graded(5.0, 512, 0.5).unwrap();
    let k = Kernel::Fractional { alpha: 0.5 };
    let s = solve_e_rho(&k, &Rho::kernel(k.clone()), 1.0, &g).unwrap();
    for i in 1..g.len() {
        let t = g.nodes()[i];
        assert!((s.value(i) - e_k_closed(t, 1.0, 0.5).unwrap()).abs() < 1e-5, "t={t}");
    }
}

#[test]
fn fractional_e_h_matches_closed_form() {
    // ρ = h with β = 0.3 < α = 0.7 needs two analytic terms
    let g = TimeGrid::graded(4.0, 512, 0.3).unwrap();
    let k = Kernel::Fractional { alpha: 0.7 };
    let h = Kernel::Fractional { alpha: 0.3 };
    let s = solve_e_rho(&k, &Rho::kernel(h), 2.0, &g).unwrap();
    for i in 1..g.len() {
        let t = g.nodes()[i];
        let want = e_h_closed(t, 2.0, 0.7, 0.3).unwrap();
        assert!((s.value(i) - want).abs() < 1e-4 * want.abs().max(1.0), "t={t}");
    }
}

#[test]
fn power_forcing_gives_shifted_index() {
    // e_g for g = t^γ/Γ(1+γ) is t^γ E_{α,γ+1}(-μ t^α)
    let g = TimeGrid::graded(3.0, 400, 0.6).unwrap();
    let k = Kernel::Fractional { alpha: 0.6 };
    let s = solve_e_rho(&k, &Rho::Power { gamma: 0.4 }, 1.5, &g).unwrap();
    for i in 1..g.len() {
        let t = g.nodes()[i];
        let want = e_h_closed(t, 1.5, 0.6, 1.4).unwrap();
        assert!((s.value(i) - want).abs() < 1e-5, "t={t}");
    }
}

#[test]
fn exponential_kernel_has_rational_resolvent() {
    // k = e^{-t}: ê_k = 1/(s+1+μ), so e_k = e^{-(1+μ)t}
    let g = TimeGrid::uniform(6.0, 1200).unwrap();
    let k = Kernel::ExponentialMixture { components: vec![(1.0, 1.0)] };
    let s = solve_e_rho(&k, &Rho::kernel(k.clone()), 0.5, &g).unwrap();
    for i in 0..g.len() {
        let t = g.nodes()[i];
        assert!((s.value(i) - (-1.5 * t).exp()).abs() < 1e-6);
    }
    let m = s.mass_estimate(TailModel::Exponential).unwrap();
    assert!((m.total - 1.0 / 1.5).abs() < 1e-5);
}

#[test]
fn log_kernel_mass_is_inverse_rate() {
    let g = TimeGrid::graded_geometric(1.0, 400, 0.5, 1e12, 160).unwrap();
    let k = Kernel::Log1pInverse;
    let s = solve_e_rho(&k, &Rho::kernel(k.clone()), 1.0, &g).unwrap();
    let m = s.mass_estimate(TailModel::for_problem(&k, &Rho::kernel(k.clone()))).unwrap();
    assert!((m.total - 1.0).abs() < 1e-3, "{m:?}");
}

#[test]
fn log_kernel_resolvent_is_positive_and_decreasing() {
    let g = TimeGrid::graded_geometric(1.0, 200, 0.5, 1e4, 40).unwrap();
    let k = Kernel::Log1pInverse;
    let s = solve_e_rho(&k, &Rho::kernel(k.clone()), 3.0, &g).unwrap();
    let v = s.values();
    for i in 1..v.len() {
        assert!(v[i] > 0.0);
        assert!(i == 1 || v[i] <= v[i - 1] * (1.0 + 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mass_identity_fractional(alpha in 0.3f64..0.9, mu in 0.5f64..4.0) {
        let k = Kernel::Fractional { alpha };
        let g = TimeGrid::graded_geometric(1.0, 200, alpha, 1e6, 40).unwrap();
        let rho = Rho::kernel(k.clone());
        let s = solve_e_rho(&k, &rho, mu, &g).unwrap();
        let m = s.mass_estimate(TailModel::for_problem(&k, &rho)).unwrap();
        prop_assert!((m.total - 1.0 / mu).abs() < 1e-3, "{:?}", m);
    }

    #[test]
    fn mass_identity_integrable(w in 0.2f64..2.0, r in 0.5f64..3.0, mu in 0.1f64..3.0) {
        let k = Kernel::ExponentialMixture { components: vec![(w, r), (0.5 * w, 4.0 * r)] };
        let mass = w / r + 0.5 * w / (4.0 * r);
        let g = TimeGrid::uniform(40.0 / r, 2000).unwrap();
        let rho = Rho::kernel(k.clone());
        let s = solve_e_rho(&k, &rho, mu, &g).unwrap();
        let m = s.mass_estimate(TailModel::Exponential).unwrap();
        prop_assert!((m.total - mass / (1.0 + mu * mass)).abs() < 1e-3, "{:?}", m);
    }

    #[test]
    fn resolvent_decreases_in_rate(alpha in 0.2f64..0.95, bshift in 0.0f64..0.9, mu in 0.1f64..5.0, t in 0.01f64..20.0) {
        // μ < μ̃ ⇒ e_h(t; μ̃) ≤ e_h(t; μ)
        let beta = alpha + bshift;
        let lo = e_h_closed(t, mu, alpha, beta).unwrap();
        let hi = e_h_closed(t, mu * 1.5, alpha, beta).unwrap();
        prop_assert!(hi <= lo + 1e-12);
    }

    #[test]
    fn solver_respects_rate_ordering(mu in 0.2f64..3.0) {
        let k = Kernel::Log1pInverse;
        let g = TimeGrid::graded(5.0, 200, 0.5).unwrap();
        let a = solve_e_rho(&k, &Rho::kernel(k.clone()), mu, &g).unwrap().values();
        let b = solve_e_rho(&k, &Rho::kernel(k.clone()), 2.0 * mu, &g).unwrap().values();
        for i in 1..g.len() {
            prop_assert!(b[i] <= a[i] + 1e-9);
            prop_assert!(b[i] >= 0.0);
        }
    }
}
