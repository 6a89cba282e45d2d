//! Schema text printed by `--describe`.

use crate::config::Kind;

const COMMON: &str = r#"Config file: one JSON object; unknown fields anywhere are errors.
  kind      string   experiment kind
  problem   object   equation (see below); required unless noted
  numerics  object   numerical settings
  output    object   { "dir": "out", "formats": ["csv", "json"] }
  params    object   kind-specific parameters
Command-line --seed, --workers and --out override numerics.master_seed,
numerics.workers and output.dir. Every run also writes manifest.json.
"#;

const PROBLEM: &str = r#"problem:
  operator   { "kind": "explicit", "eigenvalues": [mu_1, ...] }
           | { "kind": "dirichlet_laplacian", "dim": d, "modes_per_axis": N }
  kernels    { "k": KERNEL, "h": KERNEL }
             KERNEL = { "kind": "fractional", "alpha": a }        t^(a-1)/Gamma(a)
                    | { "kind": "log1p_inverse" }                  log(1 + 1/t)
                    | { "kind": "exponential_mixture", "components": [[theta, lambda], ...] }
                    | { "kind": "tabulated", "times": [...], "values": [...], "delta": d, "c_delta": c }
             h fractional needs beta > 1/2 (local square integrability)
  drift      { "kind": "zero" } (default) | { "kind": "linear", "slope": s }
           | { "kind": "modewise", "map": MAP } | { "kind": "pointwise", "map": MAP }
  diffusion  { "kind": "zero" } | { "kind": "additive", "sigma0": [per mode] } (default zero)
           | { "kind": "diagonal_multiplicative", "map": MAP } | { "kind": "pointwise", "map": MAP }
             MAP = { "kind": "affine", "slope", "offset" } | sine {amplitude, frequency, phase}
                 | tanh {amplitude, scale} | clamp {lo, hi}
             pointwise maps need the one-dimensional Dirichlet Laplacian
  forcing    { "kind": "power", "gamma": g, "state": [x0 per mode] }   g(t) = t^g/Gamma(1+g) x0
           | { "kind": "kernel_convolved", "kernel": KERNEL, "g0": { "kind": "constant", "values": [...] } }
           | { "kind": "tabulated", "modes": [GRID_FUNCTION, ...] }
           | { "kind": "resolved", "modes": [...], "limit": [...] | null }
  horizon    final time T > 0
  scheme     "euler_left" (default) | "exact_gaussian" (linear additive, fractional kernels)
  noise_weights  "moment_matched" (default) | "left_point"
"#;

fn numerics(kind: Kind) -> &'static str {
    match kind {
        Kind::MlTables => "numerics:\n  tolerance   relative tolerance of c_q (default 1e-10)\n",
        Kind::ResolventSolve => {
            "numerics:\n  grid   { \"kind\": \"uniform\", \"horizon\": T, \"n\": N }\n       | { \"kind\": \"graded\", \"horizon\": T, \"n\": N, \"gamma\": g }\n       | { \"kind\": \"graded_geometric\", \"t_switch\", \"n_graded\", \"gamma\", \"horizon\", \"per_decade\" }\n"
        }
        Kind::Conditions => "numerics: unused\n",
        Kind::Simulate | Kind::Converge | Kind::Dichotomy | Kind::RestartCheck => {
            "numerics:\n  master_seed   u64, required\n  n_paths       ensemble size, required\n  step          uniform time step, required for euler_left\n  workers       threads, 0 = all cores; results do not depend on it\n  p, bootstrap, permutations   Wasserstein order (2), bootstrap and permutation counts (100)\n"
        }
    }
}

fn params(kind: Kind) -> &'static str {
    match kind {
        Kind::MlTables => {
            "Tabulates c_q(alpha, beta) = int_0^inf |t^(beta-1) E_{alpha,beta}(-t^alpha)|^q dt over a grid of\n(alpha, beta, q); entries outside the integrability window are inf. For q = 2 the\ntime-domain value is compared with the frequency-domain formula under both\ncandidate phases cos(alpha pi/2) and cos(alpha pi). problem is not used.\nparams:\n  alphas       [..] in (0, 2)\n  betas        [..] positive\n  qs           [..] >= 1 (default [1, 2])\n  plancherel   bool (default true)\nartifacts: cq.csv (alpha,beta,q,c_q), plancherel.json\n"
        }
        Kind::ResolventSolve => {
            "Solves e + mu (k * e) = rho on a time grid and extrapolates the mass int_0^inf e.\nFor rho = k this is the resolvent e_k, whose mass is 1/mu for non-integrable k.\nproblem is not used.\nparams:\n  kernel   KERNEL\n  rho      { \"kind\": \"kernel\", \"kernel\": KERNEL } | { \"kind\": \"power\", \"gamma\": g }\n  mu       positive rate\n  tail     { \"kind\": \"none\" | \"exponential\" | \"inverse_log\" } | { \"kind\": \"power_law\", \"exponent\", \"spacing\" }\n           (default chosen from kernel and rho)\nartifacts: e_rho.csv (t,e_rho,partial_integral), resolvent.json\n"
        }
        Kind::Conditions => {
            "Evaluates the sufficient conditions for a limit distribution: the scalar\ntheorem (one explicit eigenvalue, fractional kernels), the general Lipschitz and\nlinear-growth dissipativity conditions, the additive-noise condition, and for the\nDirichlet Laplacian the admissible beta interval and the multiplicative closed\nform. Each report lists lhs, threshold, error band and verdict pass | fail |\ninconclusive.\nparams:\n  delta   regularity index of V = H^delta (default 0)\n  gamma   forcing exponent for the region check (default: from a power forcing)\nartifacts: conditions.json\n"
        }
        Kind::Simulate => {
            "Simulates an ensemble and records the marginals. scheme euler_left uses the\nexponential-Euler Volterra recursion with the chosen noise weights; exact_gaussian\ndraws the Gaussian marginals of linear additive problems exactly.\nparams:\n  record_times    increasing times <= horizon (default [horizon])\n  write_samples   bool (default true)\nartifacts: samples.csv (time,path_index,mode_index,value), moments.csv\n"
        }
        Kind::Converge => {
            "Estimates W_p between the law of u(t) and a reference law for each t, with\nbootstrap standard errors and the sampling noise floor.\nparams:\n  times       increasing comparison times\n  reference   { \"kind\": \"gaussian\", \"mean\": [...], \"variance\": [...] }\n            | { \"kind\": \"late_time\", \"factor\": f }\n            | { \"kind\": \"samples\", \"law\": { \"time\", \"values\": [[...]], \"lineage\": null } }\nartifacts: convergence.csv (t,W_hat,stderr,bound_envelope), convergence.json\n"
        }
        Kind::Dichotomy => {
            "Runs the problem with its own forcing and with other_forcing and compares the\nlaws at the horizon: same_limit when W_hat is within the noise floor,\ndifferent_limits when it exceeds three noise floors. For power forcing the\nlimit depends on the initial value exactly when gamma equals alpha.\nparams:\n  other_forcing   FORCING\n  horizon         comparison time\nartifacts: dichotomy.json\n"
        }
        Kind::RestartCheck => {
            "Compares u(t + tau) with the equation restarted at tau, whose forcing is the\nrealized past of an independent path. Equal laws are the coupling step behind\nthe limit theorem. Reports the largest per-mode KS statistic and its 5% critical\nvalue. Needs the euler_left scheme and t + tau <= horizon.\nparams:\n  tau   restart time\n  t     time after the restart\nartifacts: restart.json, restart_moments.csv\n"
        }
    }
}

/// Schema of `kind`.
pub fn describe(kind: Kind) -> String {
    let mut s = format!("kind: {}\n\n{}\n{}", kind.name(), params(kind), numerics(kind));
    s.push('\n');
    if kind.needs_problem() {
        s.push_str(PROBLEM);
        s.push('\n');
    }
    s.push_str(COMMON);
    s
}
