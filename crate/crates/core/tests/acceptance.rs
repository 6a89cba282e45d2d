//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.
//!
//! The Plancherel phase verdicts are written to
//! `$SVELAB_ACCEPTANCE_DIR/plancherel_verdict.json` (default: cargo's
//! integration-test scratch directory).

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};
use svelab::conditions::{check_heat_region, Verdict};
use svelab::grid::TimeGrid;
use svelab::kernel::Kernel;
use svelab::limitdist::*;
use svelab::mlf::*;
use svelab::simulator::*;
use svelab::spectral::{DiagonalOperator, ForcingSpec, KernelPair};
use svelab::volterra1d::{solve_e_rho, Rho, TailModel};

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "mittag-leffler reductions", budget: secs(1), run: ml_reductions },
        Criterion { id: 2, name: "c_1(alpha, alpha) = 1", budget: secs(10), run: c1_identity },
        Criterion { id: 3, name: "plancherel cross-oracle", budget: secs(30), run: plancherel },
        Criterion { id: 4, name: "volterra solver vs closed form", budget: secs(5), run: volterra_closed_form },
        Criterion { id: 5, name: "log kernel resolvent mass", budget: secs(5), run: log_kernel_mass },
        Criterion { id: 6, name: "stationary variance", budget: secs(120), run: stationary_variance },
        Criterion { id: 7, name: "ou convergence", budget: secs(60), run: ou_convergence },
        Criterion { id: 8, name: "initial-condition dichotomy", budget: secs(300), run: dichotomy },
        Criterion { id: 9, name: "restart law equality", budget: secs(120), run: restart },
        Criterion { id: 10, name: "spectral heat variances", budget: secs(300), run: heat_variances },
        Criterion { id: 11, name: "heat region endpoints", budget: secs(1), run: heat_region },
        Criterion { id: 12, name: "property suites", budget: secs(300), run: properties },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = elapsed <= c.budget;
        let pass = ok && in_time;
        if !pass {
            failed += 1;
        }
        let time_note = if in_time { String::new() } else { format!(" over budget {:?}", c.budget) };
        println!(
            "{} {:>2} {}: {} [{:.2}s{}]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64(),
            time_note
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ml_reductions() -> Outcome {
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for i in 0..=500 {
        let x = i as f64 * 0.1;
        e1 = e1.max((mittag_leffler_closed(1.0, 1.0, -x).map_err(err)? - (-x).exp()).abs());
        e2 = e2.max((mittag_leffler_closed(2.0, 1.0, -x * x).map_err(err)? - x.cos()).abs());
    }
    Ok((e1 <= 1e-10 && e2 <= 1e-10, format!("max |E11 - exp| = {e1:.2e}, max |E21 - cos| = {e2:.2e}")))
}

fn c1_identity() -> Outcome {
    let mut worst = 0.0f64;
    for alpha in [0.3, 0.5, 0.7, 0.9, 1.0] {
        let mut req = CqRequest::new(alpha, alpha, 1.0).map_err(err)?;
        req.tol = 1e-10;
        worst = worst.max((c_q(req).map_err(err)? - 1.0).abs());
    }
    Ok((worst <= 1e-6, format!("max |c_1 - 1| = {worst:.2e}")))
}

#[derive(Serialize)]
struct PlancherelArtifact {
    convention: &'static str,
    cells: Vec<PlancherelVerdict>,
}

fn artifact_dir() -> PathBuf {
    std::env::var_os("SVELAB_ACCEPTANCE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_TARGET_TMPDIR")))
}

fn plancherel() -> Outcome {
    let mut cells = Vec::new();
    let mut worst = 0.0f64;
    let mut half_wins = true;
    for alpha in [0.6, 0.8, 1.0, 1.2, 1.5] {
        let mut betas = vec![0.8, 1.0, alpha, alpha + 0.4];
        betas.sort_by(f64::total_cmp);
        betas.dedup();
        for beta in betas.into_iter().filter(|&b| in_integrability_window(alpha, b, 2.0)) {
            let v = plancherel_phase_verdict(alpha, beta).map_err(err)?;
            worst = worst.max((v.half_angle_phase - v.time_domain).abs() / v.time_domain);
            half_wins &= v.verdict.starts_with("phase cos(alpha*pi/2) matches") || v.verdict.starts_with("both");
            cells.push(v);
        }
    }
    let dir = artifact_dir();
    std::fs::create_dir_all(&dir).map_err(err)?;
    let path = dir.join("plancherel_verdict.json");
    let art = PlancherelArtifact { convention: "cos(alpha*pi/2)", cells };
    std::fs::write(&path, serde_json::to_string_pretty(&art).map_err(err)?).map_err(err)?;
    Ok((
        worst <= 1e-6 && half_wins,
        format!("{} cells, max rel error {worst:.2e}, phase cos(alpha pi/2); verdicts in {}", art.cells.len(), path.display()),
    ))
}

fn sup_error(alpha: f64, grid: &TimeGrid) -> Result<f64, String> {
    let k = Kernel::Fractional { alpha };
    let s = solve_e_rho(&k, &Rho::kernel(k.clone()), 1.0, grid).map_err(err)?;
    let mut e = 0.0f64;
    for (i, &t) in grid.nodes().iter().enumerate().skip(1) {
        e = e.max((s.value(i) - e_k_closed(t, 1.0, alpha).map_err(err)?).abs());
    }
    Ok(e)
}

fn volterra_closed_form() -> Outcome {
    let half = sup_error(0.5, &TimeGrid::graded(5.0, 2048, 0.5).map_err(err)?)?;
    let coarse = sup_error(1.0, &TimeGrid::graded(5.0, 2048, 1.0).map_err(err)?)?;
    let fine = sup_error(1.0, &TimeGrid::graded(5.0, 4096, 1.0).map_err(err)?)?;
    let ratio = coarse / fine;
    Ok((half <= 1e-4 && ratio >= 1.8, format!("alpha=0.5 sup error {half:.2e}; alpha=1 error ratio {ratio:.3}")))
}

fn log_kernel_mass() -> Outcome {
    let g = TimeGrid::graded_geometric(1.0, 400, 0.5, 1e12, 160).map_err(err)?;
    let k = Kernel::Log1pInverse;
    let rho = Rho::kernel(k.clone());
    let s = solve_e_rho(&k, &rho, 1.0, &g).map_err(err)?;
    let m = s.mass_estimate(TailModel::for_problem(&k, &rho)).map_err(err)?;
    Ok(((m.total - 1.0).abs() < 1e-3, format!("mass {:.6}", m.total)))
}

fn stationary_variance() -> Outcome {
    let (alpha, beta) = (0.75, 1.0);
    let params = MLParams::new(alpha, beta).map_err(err)?;
    let mut req = CqRequest::new(alpha, beta, 2.0).map_err(err)?;
    req.tol = 1e-10;
    let c2 = c_q(req).map_err(err)?;
    let mut horizon = 1.0;
    while lq_mass(params, 2.0, horizon, 1e-10).map_err(err)? < 0.99 * c2 {
        horizon *= 2.0;
    }
    let step = 0.125;
    let p = SveProblem::scalar_additive(-1.0, alpha, beta, 1.0, 0.0, 0.0, horizon).map_err(err)?;
    let grid = TimeGrid::uniform(horizon, (horizon / step) as usize).map_err(err)?;
    let sim = Simulator::new(&p, &grid).map_err(err)?;
    let law = sim.ensemble(10_000, &[horizon], 6, NS_PATHS, 0).map_err(err)?.remove(0);
    let (var, se) = (law.variance(0), law.stderr_variance(0));
    let z = (var - c2) / se;
    Ok((z.abs() <= 3.0, format!("T={horizon}, Var={var:.5}, c_2={c2:.5}, {z:+.2} SE")))
}

fn ou_convergence() -> Outcome {
    let p = SveProblem::scalar_additive(-1.0, 1.0, 1.0, 1.0, 0.0, 5.0, 8.0).map_err(err)?;
    let reference = Reference::Gaussian { mean: vec![0.0], variance: vec![0.5] };
    let s = ExperimentSettings::new(10_000, 0.01, 7);
    let r = convergence_experiment(&p, &[1.0, 2.0, 4.0, 8.0], &reference, &s).map_err(err)?;
    let w: Vec<f64> = r.points.iter().map(|p| p.w).collect();
    let decreasing = w.windows(2).all(|x| x[1] < x[0]);
    let last = w[w.len() - 1];
    Ok((
        decreasing && last < r.noise_floor,
        format!("W = {:?}, noise floor {:.4}", w.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(), r.noise_floor),
    ))
}

fn dependence(gamma: f64) -> Result<DependenceReport, String> {
    let mut p = SveProblem::scalar_additive(-1.0, 0.8, 1.0, 1.0, gamma, 0.0, 1.0).map_err(err)?;
    p.scheme = Scheme::ExactGaussian;
    let s = ExperimentSettings::new(10_000, 0.01, 8);
    initial_dependence_experiment(&p, &ForcingSpec::Power { gamma, state: vec![2.0] }, 1e6, &s).map_err(err)
}

fn dichotomy() -> Outcome {
    let sub = dependence(0.4)?;
    let crit = dependence(0.8)?;
    let d = crit.mean_difference[0];
    let se = crit.mean_difference_stderr[0];
    let ok = sub.w <= sub.noise_floor && (d - 2.0).abs() <= 3.0 * se && crit.w >= 10.0 * crit.noise_floor;
    Ok((
        ok,
        format!(
            "gamma=0.4: W={:.4} floor {:.4}; gamma=0.8: mean diff {d:.4} +- {se:.4}, W={:.4} = {:.1} x floor",
            sub.w,
            sub.noise_floor,
            crit.w,
            crit.w / crit.noise_floor
        ),
    ))
}

fn restart() -> Outcome {
    let (tau, t) = (1.0, 2.0);
    let p = SveProblem::scalar_additive(-1.0, 0.75, 1.0, 1.0, 0.5, 1.0, tau + t).map_err(err)?;
    let grid = TimeGrid::uniform(tau + t, 300).map_err(err)?;
    let sim = Simulator::new(&p, &grid).map_err(err)?;
    let (direct, restarted) = sim.restart_experiment(tau, t, 10_000, 9, 0).map_err(err)?;
    let ks = svelab::stats::ks_statistic(direct.mode(0), restarted.mode(0));
    let crit = svelab::stats::ks_critical_5pct(direct.len(), restarted.len());
    Ok((ks < crit, format!("KS {ks:.4} vs 5% critical {crit:.4}")))
}

fn heat_variances() -> Outcome {
    let modes = 32;
    let horizon = 10.0;
    let p = SveProblem {
        operator: DiagonalOperator::dirichlet_laplacian(1, modes).map_err(err)?,
        kernels: KernelPair::fractional(1.0, 1.0),
        drift: Drift::Zero,
        diffusion: Diffusion::Additive { sigma0: vec![1.0; modes] },
        forcing: ForcingSpec::Power { gamma: 0.0, state: vec![0.0; modes] },
        horizon,
        scheme: Scheme::EulerLeft,
        noise_weights: NoiseWeights::MomentMatched,
    };
    let grid = TimeGrid::uniform(horizon, 1000).map_err(err)?;
    let sim = Simulator::new(&p, &grid).map_err(err)?;
    let law = sim.ensemble(10_000, &[horizon], 10, NS_PATHS, 0).map_err(err)?.remove(0);
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [1usize, 2, 4, 8] {
        let want = 1.0 / (2.0 * (n * n) as f64);
        let z = (law.variance(n - 1) - want) / law.stderr_variance(n - 1);
        ok &= z.abs() <= 3.0;
        parts.push(format!("n={n}: {z:+.2} SE"));
    }
    Ok((ok, parts.join(", ")))
}

fn heat_region() -> Outcome {
    let inner = check_heat_region(1, 1.0, 1.0, 0.0, 0.0, false).map_err(err)?;
    let lo = check_heat_region(1, 1.0, 0.75, 0.0, 0.0, false).map_err(err)?;
    let hi = check_heat_region(1, 1.0, 1.5, 0.0, 0.0, false).map_err(err)?;
    let upper = inner.terms.iter().find(|t| t.name == "upper").map(|t| t.value);
    let ok = inner.threshold == 0.75
        && upper == Some(1.5)
        && lo.verdict == Verdict::Fail
        && hi.verdict == Verdict::Pass
        && check_heat_region(1, 1.0, 1.5 + 1e-12, 0.0, 0.0, false).map_err(err)?.verdict == Verdict::Fail;
    Ok((
        ok,
        format!("interval ({}, {:?}]; beta=3/4 {:?}, beta=3/2 {:?}", inner.threshold, upper.unwrap_or(f64::NAN), lo.verdict, hi.verdict),
    ))
}

fn property(name: &str, cases: u32, f: impl Fn(&mut TestRunner) -> Result<(), String>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    f(&mut runner).map_err(|e| format!("{name}: {e}"))
}

fn properties() -> Outcome {
    let mut failures = Vec::new();
    let mut names = Vec::new();
    let mut check = |name: &'static str, r: Result<(), String>| {
        names.push(name);
        if let Err(e) = r {
            failures.push(e);
        }
    };
    check(
        "metric axioms",
        property("metric axioms", 128, |r| {
            let v = prop::collection::vec(-50.0f64..50.0, 1..40);
            r.run(&(v.clone(), v.clone(), v, 1.0f64..4.0), |(x, y, z, p)| {
                let xy = wasserstein_1d(p, &x, &y).unwrap();
                prop_assert_eq!(xy, wasserstein_1d(p, &y, &x).unwrap());
                prop_assert_eq!(wasserstein_1d(p, &x, &x).unwrap(), 0.0);
                prop_assert!(xy >= 0.0);
                prop_assert!(xy <= wasserstein_1d(p, &x, &z).unwrap() + wasserstein_1d(p, &z, &y).unwrap() + 1e-9);
                Ok(())
            })
            .map_err(err)
        }),
    );
    check(
        "positivity",
        property("positivity", 256, |r| {
            r.run(&(0.05f64..1.0, 0.01f64..10.0, 0.0f64..200.0), |(a, mu, t)| {
                prop_assert!(e_k_closed(t, mu, a).unwrap() >= 0.0);
                Ok(())
            })
            .map_err(err)
        }),
    );
    check(
        "rate monotonicity",
        property("rate monotonicity", 256, |r| {
            r.run(&(0.05f64..1.0, 0.01f64..5.0, 1.0f64..3.0, 0.01f64..50.0), |(a, mu, f, t)| {
                prop_assert!(e_k_closed(t, mu * f, a).unwrap() <= e_k_closed(t, mu, a).unwrap() * (1.0 + 1e-12));
                Ok(())
            })
            .map_err(err)
        }),
    );
    check(
        "scaling law",
        property("scaling law", 256, |r| {
            r.run(&(0.1f64..1.9, 0.2f64..2.5, 0.1f64..10.0, 0.01f64..20.0), |(a, b, mu, t)| {
                let lhs = e_h_closed(t, mu, a, b).unwrap();
                let rhs = mu.powf((1.0 - b) / a) * e_h_closed(mu.powf(1.0 / a) * t, 1.0, a, b).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1e-3), "{} vs {}", lhs, rhs);
                Ok(())
            })
            .map_err(err)
        }),
    );
    check(
        "worker determinism",
        property("worker determinism", 8, |r| {
            r.run(&(any::<u64>(), 0.3f64..1.0), |(seed, alpha)| {
                let p = SveProblem::scalar_additive(-1.0, alpha, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
                let grid = TimeGrid::uniform(1.0, 50).unwrap();
                let sim = Simulator::new(&p, &grid).unwrap();
                let one = sim.ensemble(64, &[0.5, 1.0], seed, NS_PATHS, 1).unwrap();
                for w in [2, 4] {
                    prop_assert_eq!(&one, &sim.ensemble(64, &[0.5, 1.0], seed, NS_PATHS, w).unwrap());
                }
                Ok(())
            })
            .map_err(err)
        }),
    );
    let detail = if failures.is_empty() {
        format!("{} (module suites run as separate test targets)", names.join(", "))
    } else {
        failures.join("; ")
    };
    Ok((failures.is_empty(), detail))
}
