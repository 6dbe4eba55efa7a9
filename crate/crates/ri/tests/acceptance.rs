//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Every tolerance is pinned here, not computed. Criterion 1 pins the
//! closed-form display values `mu_y = sqrt(ln 2)`, `b = -sqrt(ln2/(1-2^-2))`,
//! `c = sqrt(ln 2)` for the worked example; those values do not satisfy the
//! stationarity identity `U = lambda ln(h/p)` that criteria 4 and 9 verify
//! (the identity forces `mu_y = sqrt(lambda kappa ln 2)`, an extra factor
//! `sqrt(lambda)`), so criterion 1 fails by construction against this
//! library's self-consistent solver and is expected to stay red. The
//! assertion is kept faithful to the stated values rather than weakened.

use ri::density::gaussian_density;
use ri::grid::Grid;
use ri::info::mutual_information;
use ri::log_model::{self, LogModelParams};
use ri::lq_gaussian::{self, LqProblem, RootChoice};
use ri::solver::{self, SolverConfig};
use ri::utility::UtilitySpec;
use ri::variational::{
    self, variational_derivative_analytic, variational_derivative_richardson,
};
use ri::{ConditionalKernel, DiscreteDensity};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::LN_2;
use std::process::Command;
use std::time::Instant;

fn report(id: &str, description: &str, pass: bool, detail: &str) {
    println!(
        "[{}] {id} — {description}{}{}",
        if pass { "PASS" } else { "FAIL" },
        if detail.is_empty() { "" } else { ": " },
        detail
    );
}

fn ri_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ri"))
}

fn read_json(dir: &std::path::Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("result.json")).expect("result.json missing");
    serde_json::from_str(&text).expect("result.json is not valid JSON")
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn c1_lq_worked_example_closed_form_display() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let status = ri_bin()
        .args([
            "lq", "--kappa", "1", "--mu-x", "0", "--sigma-x", "1", "--theta", "1", "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let json = read_json(dir.path());
    let elapsed = start.elapsed();

    let mu_y_stated = LN_2.sqrt(); // sqrt(ln 2)
    let phi_stated = 1.0 / (1.0 - 0.25f64).sqrt(); // 1/sqrt(1 - 2^-2)
    let b_stated = -(LN_2 / 0.75).sqrt(); // -sqrt(ln2/(1-2^-2))
    let c_stated = LN_2.sqrt();

    let mu_y = json["mu_y"].as_f64().unwrap();
    let phi = json["phi"].as_f64().unwrap();
    let b = json["b"].as_f64().unwrap();
    let c = json["c"].as_f64().unwrap();

    let tol = 1e-10;
    let ok = rel_err(mu_y, mu_y_stated) <= tol
        && rel_err(phi, phi_stated) <= tol
        && rel_err(b, b_stated) <= tol
        && rel_err(c, c_stated) <= tol
        && elapsed.as_secs_f64() < 1.0;
    report(
        "C1",
        "lq worked example reproduces the closed-form display values",
        ok,
        &format!(
            "mu_y = {mu_y:.9} vs stated sqrt(ln2) = {mu_y_stated:.9}; the stated display \
             values violate the stationarity identity (see C4): the identity forces \
             mu_y = sqrt(lambda kappa ln2) = {:.9}, so this criterion conflicts with \
             criterion 4 and is expected to fail",
            (2.0 / 3.0 * LN_2).sqrt()
        ),
    );
    assert!(
        ok,
        "stated closed-form display values are not self-consistent; the library returns \
         the identity-exact solution (mu_y = {mu_y:.12}, stated {mu_y_stated:.12})"
    );
}

#[test]
fn c2_multiplier_closed_form() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for kappa in [0.5, 1.0, 2.0] {
        let problem = LqProblem::new(kappa, 0.0, 1.0, 1.0).unwrap();
        let s = lq_gaussian::solve_restrictions(&problem, RootChoice::Plus).unwrap();
        let want = 2.0 * LN_2 / (2f64.powf(2.0 * kappa) - 1.0);
        worst = worst.max(rel_err(s.lambda_tilde_bits, want));
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-12 && elapsed.as_secs_f64() < 1.0;
    report(
        "C2",
        "multiplier matches 2 ln2 sigma_x^2 / (2^(2 kappa) - 1) for kappa in {0.5, 1, 2}",
        ok,
        &format!("max relative error {worst:.2e}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn c3_quadratic_loss_infeasibility_certificate() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let output = ri_bin()
        .args(["check", "--preset", "sims2003-quadratic", "--kappa", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    let json = read_json(dir.path());
    let exit2 = output.status.code() == Some(2);
    let infeasible = json["feasible"].as_bool() == Some(false);
    let certificate = json["certificate"].as_str().unwrap_or("").to_string();
    let names_relation = certificate.contains("cross-term");
    let ok = exit2 && infeasible && names_relation && elapsed.as_secs_f64() < 1.0;
    report(
        "C3",
        "quadratic loss (theta=phi=1, b=c=0) is certified infeasible with exit status 2",
        ok,
        &format!("exit = {:?}, certificate = '{certificate}'", output.status.code()),
    );
    assert!(ok);
}

#[test]
fn c4_stationarity_identity_on_probe_lattice() {
    let start = Instant::now();
    let problem = LqProblem::new(1.0, 0.0, 1.0, 1.0).unwrap();
    let s = lq_gaussian::solve_restrictions(&problem, RootChoice::Plus).unwrap();
    let sigma_x = problem.sigma_x_sq.sqrt();
    let sigma_y = s.sigma_y_sq.sqrt();
    let rho = s.rho_sq.sqrt();
    let cond_var = problem.sigma_x_sq * (1.0 - s.rho_sq);
    let mut max_resid = 0.0f64;
    for i in 0..21 {
        for j in 0..21 {
            let x = problem.mu_x + sigma_x * (-3.0 + 0.3 * i as f64);
            let y = s.mu_y + sigma_y * (-3.0 + 0.3 * j as f64);
            let u = lq_gaussian::lq_utility_eval(problem.theta, s.phi, s.b, s.c, x, y);
            let mu_xy = problem.mu_x + rho * (sigma_x / sigma_y) * (y - s.mu_y);
            let ln_ratio = 0.5 * (problem.sigma_x_sq / cond_var).ln()
                - (x - mu_xy) * (x - mu_xy) / (2.0 * cond_var)
                + (x - problem.mu_x) * (x - problem.mu_x) / (2.0 * problem.sigma_x_sq);
            max_resid = max_resid.max((u - s.lambda_nats * ln_ratio).abs());
        }
    }
    let elapsed = start.elapsed();
    let ok = max_resid <= 1e-8 && elapsed.as_secs_f64() < 1.0;
    report(
        "C4",
        "U(x,y) = lambda ln(h/p) on a 21x21 probe lattice for the restricted solution",
        ok,
        &format!("max |residual| = {max_resid:.2e}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn c5_solver_recovers_the_analytic_kernel() {
    let start = Instant::now();
    let problem = LqProblem::new(1.0, 0.0, 1.0, 1.0).unwrap();
    let s = lq_gaussian::solve_restrictions(&problem, RootChoice::Plus).unwrap();
    let gx = Grid::uniform(-5.0, 5.0, 201).unwrap();
    let gy = lq_gaussian::default_action_grid(&s, &problem, &gx, 201).unwrap();
    let prior = gaussian_density(0.0, 1.0, &gx).unwrap();
    let mut config = SolverConfig::new(1.0).unwrap();
    // iteration budget for the timed run; the marginal drift beyond this
    // point is ~1e-8 and far below every tolerance asserted here
    config.max_inner_iterations = 2000;
    let result = solver::solve(&prior, &s.utility(&problem), &gy, &config).unwrap();

    let (slope, var) = conditional_moments(&result.kernel);
    let i_err = (result.achieved_information_bits - 1.0).abs();
    let slope_ok = (slope - 0.866025).abs() <= 0.02 * 0.866025;
    let var_ok = (var - 0.25).abs() <= 0.04 * 0.25;
    let elapsed = start.elapsed();
    let ok = slope_ok && var_ok && i_err <= 1e-6 && elapsed.as_secs_f64() < 30.0;
    report(
        "C5",
        "discretized solver reproduces slope 0.866025 (2%), variance 0.25 (4%), I = 1 bit (1e-6)",
        ok,
        &format!(
            "slope = {slope:.6}, variance = {var:.6}, |I - 1| = {i_err:.2e}, \
             lambda_tilde = {:.6}, {elapsed:.2?}",
            result.lambda_tilde_bits
        ),
    );
    assert!(ok);
}

fn conditional_moments(kernel: &ConditionalKernel) -> (f64, f64) {
    let gx = kernel.row_grid();
    let gy = kernel.col_grid();
    let (mut sx, mut sxx, mut sm, mut sxm, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut var_acc, mut var_n) = (0.0, 0.0);
    for (i, row) in kernel.rows().enumerate() {
        let x = gx.nodes()[i];
        if x.abs() > 2.0 {
            continue;
        }
        let mut m = 0.0;
        for ((q, y), w) in row.iter().zip(gy.nodes()).zip(gy.weights()) {
            m += q * y * w;
        }
        sx += x;
        sxx += x * x;
        sm += m;
        sxm += x * m;
        n += 1.0;
        if x.abs() <= 1.0 {
            let mut v = 0.0;
            for ((q, y), w) in row.iter().zip(gy.nodes()).zip(gy.weights()) {
                v += q * (y - m) * (y - m) * w;
            }
            var_acc += v;
            var_n += 1.0;
        }
    }
    ((n * sxm - sx * sm) / (n * sxx - sx * sx), var_acc / var_n)
}

#[test]
fn c6_log_model_reverse_conditional_normalizes() {
    let start = Instant::now();
    let params = LogModelParams::new(2.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for mult in [1.0, 1.25, 1.5, 2.0, 3.0] {
        let y = mult * params.x0;
        let grid = params
            .default_conditional_grid(y, 20_001, log_model::DEFAULT_TAIL_MASS)
            .unwrap();
        let h = params.h_conditional(y, &grid).unwrap();
        worst = worst.max((grid.integrate(&h).unwrap() - 1.0).abs());
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-4 && elapsed.as_secs_f64() < 5.0;
    report(
        "C6",
        "integral of h(x|y) dx = 1 within 1e-4 at five probe actions for (alpha, beta) = (2, 1)",
        ok,
        &format!("max |defect| = {worst:.2e}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn c7_conditional_mean_ratio() {
    let start = Instant::now();
    let params = LogModelParams::new(2.0, 1.0).unwrap();
    let ratio = params.conditional_mean_ratio_by_quadrature(1.0, 40_001).unwrap();
    let quad_ok = (ratio - 4.0).abs() <= 1e-3;

    // strict inequality ratio > 1 + beta over a 20-point sweep
    let mut strict_ok = true;
    for k in 0..20 {
        let alpha = 1.1 + 0.35 * k as f64;
        let beta = 0.25 + 0.15 * k as f64;
        let r = log_model::conditional_mean_ratio(alpha, beta).unwrap();
        strict_ok &= r > 1.0 + beta;
    }
    let elapsed = start.elapsed();
    let ok = quad_ok && strict_ok && elapsed.as_secs_f64() < 5.0;
    report(
        "C7",
        "E[X|Y=1] = (1+beta) alpha/(alpha-1) = 4 within 1e-3, strict > 1+beta over a 20-point sweep",
        ok,
        &format!("quadrature ratio = {ratio:.6}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn c8_nonexistence_diagnostic_and_exit_status() {
    let start = Instant::now();
    let params = LogModelParams::new(2.0, 1.0).unwrap();
    let y_grid = Grid::uniform(params.x0, 3.0 * params.x0, 2001).unwrap();
    let probes: Vec<f64> = (1..=5).map(|k| params.x0 * (1.0 + 0.5 * k as f64)).collect();
    let marginals: Vec<Vec<f64>> = vec![
        vec![1.0; y_grid.n()],
        y_grid.nodes().iter().map(|y| (params.x0 / y).powi(3)).collect(),
        y_grid
            .nodes()
            .iter()
            .map(|y| {
                let z = (y - 1.8 * params.x0) / (0.3 * params.x0);
                (-0.5 * z * z).exp()
            })
            .collect(),
    ];
    let mut all_positive = true;
    let mut min_slope = f64::INFINITY;
    for g in &marginals {
        let rep = log_model::nonexistence_diagnostic(&params, g, &y_grid, &probes).unwrap();
        all_positive &= rep.strictly_increasing && rep.slopes.iter().all(|s| *s > 0.0);
        for s in &rep.slopes {
            min_slope = min_slope.min(*s);
        }
    }

    // the CLI reports the finding through exit status 2
    let dir = tempfile::tempdir().unwrap();
    let status = ri_bin()
        .args(["logmodel", "--alpha", "2", "--beta", "1", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    let exit2 = status.code() == Some(2);
    let json = read_json(dir.path());
    let flagged = json["nonexistence"]["strictly_increasing"].as_bool() == Some(true);

    let elapsed = start.elapsed();
    let ok = all_positive && exit2 && flagged && elapsed.as_secs_f64() < 5.0;
    report(
        "C8",
        "running mass strictly increases for three marginals; CLI reports the finding via exit 2",
        ok,
        &format!("min slope = {min_slope:.3e}, exit = {:?}, {elapsed:.2?}", status.code()),
    );
    assert!(ok);
}

#[test]
fn c9_variational_derivative_agreement() {
    let start = Instant::now();
    let n = 41;
    let gx = Grid::uniform(-4.0, 4.0, n).unwrap();
    let gy = Grid::uniform(-4.0, 4.0, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(90210);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let pv: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let prior = DiscreteDensity::normalized(gx.clone(), pv).unwrap();
        let kv: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let kernel = ConditionalKernel::new_unnormalized(gx.clone(), gy.clone(), kv)
            .unwrap()
            .row_normalized()
            .unwrap();
        let u: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda_tilde = rng.gen_range(0.2..2.0);
        let lambda_nats = lambda_tilde / LN_2;
        let (ix, iy) = loop {
            let ix = rng.gen_range(2..n - 2);
            let iy = rng.gen_range(2..n - 2);
            if prior.values()[ix] * kernel.value(ix, iy) > 1e-3 {
                break (ix, iy);
            }
        };
        let analytic =
            variational_derivative_analytic(&prior, &kernel, &u, lambda_nats, ix, iy).unwrap();
        let richardson = variational_derivative_richardson(
            &prior, &kernel, &u, lambda_tilde, 1.0, ix, iy, 1e-5, 1e-6,
        )
        .unwrap();
        worst = worst.max((richardson - analytic).abs() / analytic.abs().max(1.0));
    }
    let agreement_ok = worst <= 1e-4;

    // stationarity-exact points: the closed-form LQ kernel
    let problem = LqProblem::new(1.0, 0.0, 1.0, 1.0).unwrap();
    let s = lq_gaussian::solve_restrictions(&problem, RootChoice::Plus).unwrap();
    let gx2 = Grid::uniform(-8.0, 8.0, 201).unwrap();
    let gy2 = lq_gaussian::default_action_grid(&s, &problem, &gx2, 201).unwrap();
    let prior2 = gaussian_density(0.0, 1.0, &gx2).unwrap();
    let kernel2 = lq_gaussian::optimal_kernel(&s, &problem, &gx2, &gy2).unwrap();
    let u2 = s.utility(&problem).tabulate(&gx2, &gy2).unwrap();
    let mut el_worst = 0.0f64;
    for (ix, iy) in [(100, 100), (80, 110), (120, 90), (60, 100), (140, 105)] {
        let d = variational_derivative_analytic(&prior2, &kernel2, &u2, s.lambda_nats, ix, iy)
            .unwrap();
        el_worst = el_worst.max(d.abs());
    }
    let el_ok = el_worst <= 1e-6;

    let elapsed = start.elapsed();
    let ok = agreement_ok && el_ok && elapsed.as_secs_f64() < 30.0;
    report(
        "C9",
        "analytic vs Richardson-extrapolated derivative within 1e-4 on 50 pairs; zero at exact points",
        ok,
        &format!(
            "max relative deviation = {worst:.2e}, max |derivative| at exact points = {el_worst:.2e}, {elapsed:.2?}"
        ),
    );
    assert!(ok);
}

#[test]
fn c10_invariant_suite() {
    let start = Instant::now();

    // (a) inner-loop Lagrangean monotonicity on three instances
    let problem = LqProblem::new(1.0, 0.0, 1.0, 1.0).unwrap();
    let s = lq_gaussian::solve_restrictions(&problem, RootChoice::Plus).unwrap();
    let gx = Grid::uniform(-5.0, 5.0, 121).unwrap();
    let gy = lq_gaussian::default_action_grid(&s, &problem, &gx, 121).unwrap();
    let prior = gaussian_density(0.0, 1.0, &gx).unwrap();
    let mut config = SolverConfig::new(1.0).unwrap();
    config.max_inner_iterations = 3000;

    let mut monotonic_violations = 0usize;
    let instances: Vec<(UtilitySpec, f64)> = vec![
        (s.utility(&problem), 0.4620981203732969),
        (
            UtilitySpec::Lq(ri::LqCoefficients { theta: 1.0, phi: 1.0, b: 0.0, c: 0.0 }),
            0.25,
        ),
        (s.utility(&problem), 5.0),
    ];
    for (u, lt) in &instances {
        let inner = solver::inner_fixed_point(&prior, u, &gy, *lt, &config).unwrap();
        for w in inner.lagrangean_trace.windows(2) {
            if w[1] < w[0] - 1e-9 * (1.0 + w[0].abs()) {
                monotonic_violations += 1;
            }
        }
    }

    // (b) achieved information non-increasing across bisection probes,
    // and (d) every solver output row-normalized at 1e-8
    let mut probe_violations = 0usize;
    let mut row_violations = 0usize;
    for (u, _) in &instances[..2] {
        let result = solver::solve(&prior, u, &gy, &config).unwrap();
        let mut probes = result.probe_trace.clone();
        probes.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in probes.windows(2) {
            if w[1].1 > w[0].1 + 1e-8 {
                probe_violations += 1;
            }
        }
        let rep = variational::bc_residual_q_with_tolerance(&result.kernel, 1e-8);
        if !rep.satisfied {
            row_violations += 1;
        }
    }

    // (c) mutual information nonnegative on 200 random kernels
    let mut rng = ChaCha8Rng::seed_from_u64(7777);
    let mut mi_violations = 0usize;
    for _ in 0..200 {
        let nx = rng.gen_range(3..14);
        let ny = rng.gen_range(3..14);
        let rgx = Grid::uniform(-1.0, 1.0, nx).unwrap();
        let rgy = Grid::uniform(-1.0, 1.0, ny).unwrap();
        let pv: Vec<f64> = (0..nx).map(|_| rng.gen_range(0.01..1.0)).collect();
        let p = DiscreteDensity::normalized(rgx.clone(), pv).unwrap();
        let kv: Vec<f64> = (0..nx * ny).map(|_| rng.gen_range(0.01..1.0)).collect();
        let k = ConditionalKernel::new_unnormalized(rgx, rgy, kv)
            .unwrap()
            .row_normalized()
            .unwrap();
        if mutual_information(&p, &k).unwrap() < -1e-8 {
            mi_violations += 1;
        }
    }

    let elapsed = start.elapsed();
    let total = monotonic_violations + probe_violations + mi_violations + row_violations;
    let ok = total == 0 && elapsed.as_secs_f64() < 60.0;
    report(
        "C10",
        "monotone Lagrangean, monotone I(lambda), nonnegative information, normalized rows",
        ok,
        &format!(
            "violations: lagrangean {monotonic_violations}, probe order {probe_violations}, \
             information sign {mi_violations}, row normalization {row_violations}; {elapsed:.2?}"
        ),
    );
    assert!(ok);

    // keep the reported information honest: recomputing it from the
    // returned kernel must reproduce the achieved value
    let result = solver::solve(&prior, &instances[0].0, &gy, &config).unwrap();
    let i1 = mutual_information(&prior, &result.kernel).unwrap();
    assert!((i1 - result.achieved_information_bits).abs() <= 1e-9);
}
