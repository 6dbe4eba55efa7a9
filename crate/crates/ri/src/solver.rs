//! Discretized solver for the information-constrained payoff maximization.
//!
//! At a fixed multiplier the optimal kernel has the Gibbs form
//! `q(y|x) = g(y) exp(U(x,y)/lambda) / Z(x)` with `g` the implied action
//! marginal, which suggests the classic alternating scheme: update `q` from
//! `g`, then `g` from `q`. Each half-step maximizes the Lagrangean
//! `E[U] - lambda_tilde I` in one block, so the Lagrangean never decreases
//! across sweeps; that monotonicity is checked on every iteration. An outer
//! bisection on `ln lambda_tilde` then drives the achieved information to
//! the budget `kappa`, using that `I(lambda_tilde)` is non-increasing.
//!
//! The per-row normalization `Z(x)` is what distinguishes this solver from
//! the raw stationarity candidate: the candidate need not normalize (and
//! generically cannot), while the fixed point enforces normalization by
//! construction. The solver is therefore the engineering answer for cases
//! where the exact variational solution does not exist, and the
//! cross-checking oracle for the closed-form cases where it does.
//!
//! Numerics: the exponent matrix is shifted by its row maxima once per
//! multiplier, so every exponential is bounded by one and the iteration
//! itself runs in the linear domain on bounded quantities. All reductions
//! run over fixed 32-row chunks combined in ascending order, which makes
//! results bit-identical for any worker count (`RI_MAX_THREADS` caps the
//! workers; 0 or unset uses all available).

use crate::density::{ConditionalKernel, DiscreteDensity};
use crate::error::{Result, RiError};
use crate::grid::Grid;
use crate::info::{expected_utility, marginal_values, mutual_information_with_marginal};
use crate::utility::UtilitySpec;

use std::f64::consts::LN_2;

/// Rows per reduction chunk; fixed so that chunked parallel sums are
/// independent of the worker count.
const CHUNK_ROWS: usize = 32;

/// Minimum matrix size before worker threads pay for themselves.
const PARALLEL_THRESHOLD: usize = 1 << 19;

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Information budget in bits.
    pub kappa_bits: f64,
    pub max_inner_iterations: usize,
    /// Sup-norm change in the action marginal that counts as inner
    /// convergence.
    pub inner_tolerance: f64,
    /// Multiplier bracket (bits units) for the outer bisection.
    pub bracket: (f64, f64),
    /// Target `|achieved I - kappa|` in bits.
    pub bisection_tolerance_bits: f64,
    pub max_bisection_steps: usize,
    /// Worker cap; 0 defers to `RI_MAX_THREADS`, then to the machine.
    pub threads: usize,
}

impl SolverConfig {
    pub fn new(kappa_bits: f64) -> Result<SolverConfig> {
        if !(kappa_bits > 0.0) || !kappa_bits.is_finite() {
            return Err(RiError::Domain(format!(
                "information budget must be positive, got {kappa_bits}"
            )));
        }
        Ok(SolverConfig {
            kappa_bits,
            max_inner_iterations: 10_000,
            inner_tolerance: 1e-10,
            bracket: (1e-6, 1e6),
            bisection_tolerance_bits: 1e-6,
            max_bisection_steps: 200,
            threads: 0,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.bracket.0 > 0.0 && self.bracket.0 < self.bracket.1) {
            return Err(RiError::Domain(format!(
                "invalid multiplier bracket ({}, {})",
                self.bracket.0, self.bracket.1
            )));
        }
        if !(self.inner_tolerance > 0.0) || !(self.bisection_tolerance_bits > 0.0) {
            return Err(RiError::Domain("tolerances must be positive".into()));
        }
        Ok(())
    }

    fn worker_count(&self) -> usize {
        let configured = if self.threads > 0 {
            self.threads
        } else {
            std::env::var("RI_MAX_THREADS")
                .ok()
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|n| *n > 0)
                .unwrap_or(0)
        };
        if configured > 0 {
            configured
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }
}

/// Output of one inner fixed-point run at a fixed multiplier.
#[derive(Debug, Clone)]
pub struct InnerSolve {
    pub kernel: ConditionalKernel,
    pub marginal: DiscreteDensity,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm marginal change at the last sweep.
    pub final_sup_change: f64,
    /// Lagrangean `E[U] - lambda_tilde I` after every sweep.
    pub lagrangean_trace: Vec<f64>,
}

/// Output of the full budget-constrained solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub kernel: ConditionalKernel,
    pub marginal: DiscreteDensity,
    pub lambda_tilde_bits: f64,
    pub achieved_information_bits: f64,
    pub expected_utility: f64,
    pub inner_iterations: usize,
    pub converged: bool,
    /// The constraint is slack: even a near-zero multiplier cannot spend
    /// the whole budget on this grid.
    pub slack_constraint: bool,
    /// `(lambda_tilde, achieved I)` for every multiplier probed.
    pub probe_trace: Vec<(f64, f64)>,
    /// Lagrangean trace of the returned kernel's inner run.
    pub lagrangean_trace: Vec<f64>,
}

/// Scalar summary of a kernel against a payoff and budget.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveReport {
    pub expected_utility: f64,
    pub information_bits: f64,
    pub lagrangean: f64,
}

/// Per-chunk sweep output: marginal contribution, Lagrangean partial, row
/// normalizers.
type ChunkPartial = (Vec<f64>, f64, Vec<f64>);

struct Workspace {
    nx: usize,
    ny: usize,
    /// Row-shifted exponential weights `exp(U/lambda - rowmax)`, in (0, 1].
    k: Vec<f64>,
    /// Row maxima of `U/lambda`.
    row_max: Vec<f64>,
    lambda_nats: f64,
    /// `w_x[i] * p[i]`
    mass_x: Vec<f64>,
    w_y: Vec<f64>,
}

impl Workspace {
    fn build(
        prior: &DiscreteDensity,
        u: &[f64],
        lambda_tilde_bits: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Workspace> {
        let lambda_nats = lambda_tilde_bits / LN_2;
        let mut k = vec![0.0; nx * ny];
        let mut row_max = vec![0.0; nx];
        for i in 0..nx {
            let row = &u[i * ny..(i + 1) * ny];
            let m = row.iter().fold(f64::NEG_INFINITY, |a, v| a.max(v / lambda_nats));
            if m == f64::NEG_INFINITY {
                return Err(RiError::Domain(format!(
                    "state node {i} has no feasible action (payoff is -inf on the whole row)"
                )));
            }
            row_max[i] = m;
            for (dst, v) in k[i * ny..(i + 1) * ny].iter_mut().zip(row) {
                *dst = (v / lambda_nats - m).exp();
            }
        }
        let mass_x: Vec<f64> = prior
            .grid()
            .weights()
            .iter()
            .zip(prior.values())
            .map(|(w, p)| w * p)
            .collect();
        Ok(Workspace { nx, ny, k, row_max, lambda_nats, mass_x, w_y: Vec::new() })
    }

    /// One sweep: from `g`, compute the row normalizers, the implied new
    /// marginal, and the row-constant part of the Lagrangean
    /// `lambda * sum_i w_i p_i (rowmax_i + ln Z_i)`.
    fn sweep(&self, g: &[f64], workers: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let ny = self.ny;
        let chunk_count = self.nx.div_ceil(CHUNK_ROWS);
        let mut partials: Vec<ChunkPartial> = Vec::with_capacity(chunk_count);

        let run_chunk = |chunk_idx: usize| -> Result<ChunkPartial> {
            let lo = chunk_idx * CHUNK_ROWS;
            let hi = (lo + CHUNK_ROWS).min(self.nx);
            let mut g_piece = vec![0.0; ny];
            let mut s_piece = 0.0;
            let mut z_piece = Vec::with_capacity(hi - lo);
            for i in lo..hi {
                let krow = &self.k[i * ny..(i + 1) * ny];
                let mut z = 0.0;
                for ((kv, gv), wv) in krow.iter().zip(g).zip(&self.w_y) {
                    z += wv * gv * kv;
                }
                if !(z > 0.0) || !z.is_finite() {
                    return Err(RiError::Numeric(format!(
                        "row normalizer at state node {i} is {z}; the marginal has lost all mass on the row's support"
                    )));
                }
                let a = self.mass_x[i] / z;
                for (dst, (kv, gv)) in g_piece.iter_mut().zip(krow.iter().zip(g)) {
                    *dst += a * gv * kv;
                }
                s_piece += self.mass_x[i] * (self.row_max[i] + z.ln());
                z_piece.push(z);
            }
            Ok((g_piece, s_piece, z_piece))
        };

        if workers > 1 && self.nx * ny >= PARALLEL_THRESHOLD && chunk_count > 1 {
            let next = std::sync::atomic::AtomicUsize::new(0);
            let results: Vec<Result<ChunkPartial>> = std::thread::scope(|scope| {
                let mut handles = Vec::with_capacity(workers);
                let next_ref = &next;
                let run = &run_chunk;
                for _ in 0..workers.min(chunk_count) {
                    handles.push(scope.spawn(move || {
                        let mut out = Vec::new();
                        loop {
                            let idx =
                                next_ref.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                            if idx >= chunk_count {
                                break;
                            }
                            out.push((idx, run(idx)));
                        }
                        out
                    }));
                }
                let mut collected: Vec<Option<Result<_>>> =
                    (0..chunk_count).map(|_| None).collect();
                for h in handles {
                    for (idx, r) in h.join().expect("solver worker panicked") {
                        collected[idx] = Some(r);
                    }
                }
                collected.into_iter().map(|r| r.expect("missing chunk")).collect()
            });
            for r in results {
                partials.push(r?);
            }
        } else {
            for idx in 0..chunk_count {
                partials.push(run_chunk(idx)?);
            }
        }

        // combine in fixed chunk order: bit-identical for any worker count
        let mut g_new = vec![0.0; ny];
        let mut s = 0.0;
        let mut z_all = Vec::with_capacity(self.nx);
        for (g_piece, s_piece, z_piece) in partials {
            for (dst, v) in g_new.iter_mut().zip(&g_piece) {
                *dst += v;
            }
            s += s_piece;
            z_all.extend(z_piece);
        }
        Ok((g_new, z_all, self.lambda_nats * s))
    }

    /// Lagrangean after the sweep: the row-constant part measures
    /// `E[U] - lambda_tilde * D(q || g_old)`; correcting by the divergence
    /// of the new marginal from the old gives `E[U] - lambda_tilde * I(q)`.
    fn lagrangean(&self, s: f64, g_old: &[f64], g_new: &[f64]) -> f64 {
        let mut kl = 0.0;
        for ((w, gn), go) in self.w_y.iter().zip(g_new).zip(g_old) {
            if *gn > 0.0 {
                kl += w * gn * (gn / go).ln();
            }
        }
        s + self.lambda_nats * kl
    }

    fn kernel_rows(&self, g: &[f64], z: &[f64]) -> Vec<f64> {
        let ny = self.ny;
        let mut q = vec![0.0; self.nx * ny];
        for i in 0..self.nx {
            let krow = &self.k[i * ny..(i + 1) * ny];
            let dst = &mut q[i * ny..(i + 1) * ny];
            for (d, (kv, gv)) in dst.iter_mut().zip(krow.iter().zip(g)) {
                *d = gv * kv / z[i];
            }
        }
        q
    }
}

/// Alternating fixed point at a fixed multiplier, started from the uniform
/// marginal (strictly positive everywhere, so no support collapses before
/// the iteration decides it should).
pub fn inner_fixed_point(
    prior: &DiscreteDensity,
    u: &UtilitySpec,
    action_grid: &Grid,
    lambda_tilde_bits: f64,
    config: &SolverConfig,
) -> Result<InnerSolve> {
    let uniform =
        DiscreteDensity::normalized(action_grid.clone(), vec![1.0; action_grid.n()])?;
    inner_fixed_point_from(prior, u, action_grid, lambda_tilde_bits, &uniform, config)
}

/// Alternating fixed point from a caller-supplied starting marginal.
pub fn inner_fixed_point_from(
    prior: &DiscreteDensity,
    u: &UtilitySpec,
    action_grid: &Grid,
    lambda_tilde_bits: f64,
    initial_marginal: &DiscreteDensity,
    config: &SolverConfig,
) -> Result<InnerSolve> {
    if !(lambda_tilde_bits > 0.0) || !lambda_tilde_bits.is_finite() {
        return Err(RiError::Domain(format!(
            "multiplier must be positive, got {lambda_tilde_bits}"
        )));
    }
    config.validate()?;
    if !initial_marginal.grid().same_as(action_grid) {
        return Err(RiError::Dimension(
            "initial marginal grid does not match the action grid".into(),
        ));
    }
    let nx = prior.grid().n();
    let ny = action_grid.n();
    let umat = u.tabulate(prior.grid(), action_grid)?;
    let mut ws = Workspace::build(prior, &umat, lambda_tilde_bits, nx, ny)?;
    ws.w_y = action_grid.weights().to_vec();
    let workers = config.worker_count();

    let mut g = initial_marginal.values().to_vec();
    let mut trace = Vec::new();
    let mut prev_l = f64::NEG_INFINITY;
    let mut iterations = 0;
    let (converged, sup) = loop {
        let (g_new, _z, s) = ws.sweep(&g, workers)?;
        iterations += 1;
        let l = ws.lagrangean(s, &g, &g_new);
        if l < prev_l - 1e-9 * (1.0 + prev_l.abs()) {
            return Err(RiError::Numeric(format!(
                "Lagrangean decreased from {prev_l} to {l} at sweep {iterations}; the alternating update lost monotonicity"
            )));
        }
        prev_l = l;
        trace.push(l);
        let sup = g_new
            .iter()
            .zip(&g)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        g = g_new;
        if sup <= config.inner_tolerance {
            break (true, sup);
        }
        if iterations >= config.max_inner_iterations {
            break (false, sup);
        }
    };

    // final kernel from the last accepted marginal
    let (_, z_last, _) = ws.sweep(&g, workers)?;
    let q = ws.kernel_rows(&g, &z_last);
    let kernel =
        ConditionalKernel::new_normalized(prior.grid().clone(), action_grid.clone(), q)?;
    let marginal = DiscreteDensity::normalized(action_grid.clone(), g)?;
    Ok(InnerSolve {
        kernel,
        marginal,
        iterations,
        converged,
        final_sup_change: sup,
        lagrangean_trace: trace,
    })
}

/// Solve the budget-constrained problem by bisection on `ln lambda_tilde`.
///
/// The achieved information is measured on each probe's kernel; the search
/// stops when it is within `bisection_tolerance_bits` of the budget. When
/// even the lower bracket endpoint cannot spend the budget, the result
/// carries the lower endpoint's solution with the slack flag set. When the
/// bracket is exhausted before the tolerance is met (possible when the
/// inner loop hits its iteration cap, leaving a truncation bias in the
/// measured information), the best probe is returned; the caller can see
/// the shortfall in `achieved_information_bits`.
pub fn solve(
    prior: &DiscreteDensity,
    u: &UtilitySpec,
    action_grid: &Grid,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let kappa = config.kappa_bits;
    let mut probe_trace = Vec::new();
    let mut total_iterations = 0usize;

    let mut probe = |lt: f64| -> Result<(f64, InnerSolve)> {
        let inner = inner_fixed_point(prior, u, action_grid, lt, config)?;
        total_iterations += inner.iterations;
        let g = marginal_values(prior, &inner.kernel);
        let i = mutual_information_with_marginal(prior, &inner.kernel, &g);
        probe_trace.push((lt, i));
        Ok((i, inner))
    };

    let (lo, hi) = config.bracket;
    let (i_lo, inner_lo) = probe(lo)?;
    if i_lo < kappa {
        // slack constraint: the budget exceeds what the grid can carry
        let result = finish(prior, u, inner_lo, lo, i_lo, true, total_iterations, probe_trace)?;
        return Ok(result);
    }
    if (i_lo - kappa).abs() <= config.bisection_tolerance_bits {
        let result = finish(prior, u, inner_lo, lo, i_lo, false, total_iterations, probe_trace)?;
        return Ok(result);
    }
    let (i_hi, inner_hi) = probe(hi)?;
    if i_hi > kappa + config.bisection_tolerance_bits {
        return Err(RiError::Bracket { i_lo, i_hi, kappa });
    }
    if (i_hi - kappa).abs() <= config.bisection_tolerance_bits {
        let result = finish(prior, u, inner_hi, hi, i_hi, false, total_iterations, probe_trace)?;
        return Ok(result);
    }

    let mut ln_lo = lo.ln();
    let mut ln_hi = hi.ln();
    let mut best: Option<(f64, f64, f64, InnerSolve)> = None;
    for _ in 0..config.max_bisection_steps {
        let mid = ((ln_lo + ln_hi) / 2.0).exp();
        let (i_mid, inner_mid) = probe(mid)?;
        let dist = (i_mid - kappa).abs();
        if dist <= config.bisection_tolerance_bits {
            let result =
                finish(prior, u, inner_mid, mid, i_mid, false, total_iterations, probe_trace)?;
            return Ok(result);
        }
        if best.as_ref().map(|(d, ..)| dist < *d).unwrap_or(true) {
            best = Some((dist, mid, i_mid, inner_mid));
        }
        if i_mid > kappa {
            ln_lo = mid.ln();
        } else {
            ln_hi = mid.ln();
        }
        // once the bracket is machine-exhausted, further probes repeat;
        // the remaining |I - kappa| is the inner loop's truncation bias,
        // which the caller sees through achieved_information_bits and the
        // converged flag
        if ln_hi - ln_lo < 1e-14 {
            break;
        }
    }
    let (_, lt, i_best, inner_best) = best.ok_or_else(|| {
        RiError::Numeric("bisection made no interior probes".into())
    })?;
    finish(prior, u, inner_best, lt, i_best, false, total_iterations, probe_trace)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    prior: &DiscreteDensity,
    u: &UtilitySpec,
    inner: InnerSolve,
    lambda_tilde_bits: f64,
    achieved: f64,
    slack: bool,
    inner_iterations: usize,
    probe_trace: Vec<(f64, f64)>,
) -> Result<SolveResult> {
    let umat = u.tabulate(prior.grid(), inner.kernel.col_grid())?;
    let eu = expected_utility(prior, &inner.kernel, &umat)?;
    Ok(SolveResult {
        expected_utility: eu,
        achieved_information_bits: achieved,
        lambda_tilde_bits,
        converged: inner.converged,
        slack_constraint: slack,
        inner_iterations,
        probe_trace,
        lagrangean_trace: inner.lagrangean_trace,
        kernel: inner.kernel,
        marginal: inner.marginal,
    })
}

/// Expected payoff, information, and Lagrangean of a kernel at the given
/// multiplier and budget.
pub fn objective_report(
    prior: &DiscreteDensity,
    kernel: &ConditionalKernel,
    u: &UtilitySpec,
    lambda_tilde_bits: f64,
    kappa_bits: f64,
) -> Result<ObjectiveReport> {
    let umat = u.tabulate(prior.grid(), kernel.col_grid())?;
    let eu = expected_utility(prior, kernel, &umat)?;
    let g = marginal_values(prior, kernel);
    let i = mutual_information_with_marginal(prior, kernel, &g);
    Ok(ObjectiveReport {
        expected_utility: eu,
        information_bits: i,
        lagrangean: eu + lambda_tilde_bits * (kappa_bits - i),
    })
}
