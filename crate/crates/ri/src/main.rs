//! `ri` — command-line front end.
//!
//! Thin layer over [`ri::report`]: parse flags, merge an optional config
//! file (flags win), run, map outcomes to exit codes (0 success, 2 negative
//! mathematical finding, 1 error, 64 usage).

use clap::{Args, Parser, Subcommand};
use ri::report::{self, Command as RunCommand, RunSpec};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ri",
    about = "Variational analysis of rational-inattention problems",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Plain-text `key = value` config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for result.json and CSV sidecars.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma list of output formats: csv,json.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form linear-quadratic Gaussian solution.
    Lq {
        #[command(flatten)]
        common: CommonArgs,
        /// Information budget in bits.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long = "mu-x", allow_negative_numbers = true)]
        mu_x: Option<f64>,
        /// Prior standard deviation.
        #[arg(long = "sigma-x")]
        sigma_x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        /// Branch of the action-mean quadratic: plus | minus.
        #[arg(long)]
        root: Option<String>,
        /// Nodes per grid for the CSV sidecars.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "span-sigmas")]
        span_sigmas: Option<f64>,
    },
    /// Logarithmic consumption-savings model diagnostics.
    Logmodel {
        #[command(flatten)]
        common: CommonArgs,
        /// Inverse multiplier (1/lambda in natural-log units).
        #[arg(long)]
        alpha: Option<f64>,
        /// Second-period weight.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "truncation-tail")]
        truncation_tail: Option<f64>,
    },
    /// Discretized information-constrained solver.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Model family: lq | log.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long = "mu-x", allow_negative_numbers = true)]
        mu_x: Option<f64>,
        #[arg(long = "sigma-x")]
        sigma_x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        root: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "span-sigmas")]
        span_sigmas: Option<f64>,
        #[arg(long = "truncation-tail")]
        truncation_tail: Option<f64>,
        /// Inner fixed-point iteration cap.
        #[arg(long = "max-inner")]
        max_inner: Option<usize>,
    },
    /// Feasibility certificate for a full coefficient tuple.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Named coefficient tuple; `sims2003-quadratic` is the pure
        /// quadratic loss (theta = phi = 1, b = c = 0).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long = "mu-x", allow_negative_numbers = true)]
        mu_x: Option<f64>,
        #[arg(long = "sigma-x")]
        sigma_x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        phi: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        b: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
    },
    /// Agreement check of analytic vs finite-perturbation derivatives.
    Derivcheck {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        seed: Option<usize>,
        #[arg(long)]
        eps1: Option<f64>,
        #[arg(long)]
        eps2: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
}

fn set_f64(spec: &mut RunSpec, key: &str, v: Option<f64>) {
    if let Some(v) = v {
        spec.set(key, v.to_string());
    }
}

fn set_usize(spec: &mut RunSpec, key: &str, v: Option<usize>) {
    if let Some(v) = v {
        spec.set(key, v.to_string());
    }
}

fn set_str(spec: &mut RunSpec, key: &str, v: &Option<String>) {
    if let Some(v) = v {
        spec.set(key, v.clone());
    }
}

fn build_spec(cmd: &Cmd) -> Result<RunSpec, ri::RiError> {
    let (run_command, common) = match cmd {
        Cmd::Lq { common, .. } => (RunCommand::Lq, common),
        Cmd::Logmodel { common, .. } => (RunCommand::LogModel, common),
        Cmd::Solve { common, .. } => (RunCommand::Solve, common),
        Cmd::Check { common, .. } => (RunCommand::Check, common),
        Cmd::Derivcheck { common, .. } => (RunCommand::DerivCheck, common),
    };
    let mut spec = RunSpec::new(run_command);

    // config file first, then flags override
    if let Some(path) = &common.config {
        for (k, v) in report::parse_config(path)? {
            spec.parameters.insert(k, v);
        }
    }
    match cmd {
        Cmd::Lq { kappa, mu_x, sigma_x, theta, root, n, span_sigmas, .. } => {
            set_f64(&mut spec, "kappa", *kappa);
            set_f64(&mut spec, "mu_x", *mu_x);
            set_f64(&mut spec, "sigma_x", *sigma_x);
            set_f64(&mut spec, "theta", *theta);
            set_str(&mut spec, "root", root);
            set_usize(&mut spec, "n", *n);
            set_f64(&mut spec, "span_sigmas", *span_sigmas);
        }
        Cmd::Logmodel { alpha, beta, n, truncation_tail, .. } => {
            set_f64(&mut spec, "alpha", *alpha);
            set_f64(&mut spec, "beta", *beta);
            set_usize(&mut spec, "n", *n);
            set_f64(&mut spec, "truncation_tail", *truncation_tail);
        }
        Cmd::Solve {
            model,
            kappa,
            mu_x,
            sigma_x,
            theta,
            alpha,
            beta,
            root,
            n,
            span_sigmas,
            truncation_tail,
            max_inner,
            ..
        } => {
            set_str(&mut spec, "model", model);
            set_f64(&mut spec, "kappa", *kappa);
            set_f64(&mut spec, "mu_x", *mu_x);
            set_f64(&mut spec, "sigma_x", *sigma_x);
            set_f64(&mut spec, "theta", *theta);
            set_f64(&mut spec, "alpha", *alpha);
            set_f64(&mut spec, "beta", *beta);
            set_str(&mut spec, "root", root);
            set_usize(&mut spec, "n", *n);
            set_f64(&mut spec, "span_sigmas", *span_sigmas);
            set_f64(&mut spec, "truncation_tail", *truncation_tail);
            set_usize(&mut spec, "max_inner", *max_inner);
        }
        Cmd::Check { preset, kappa, mu_x, sigma_x, theta, phi, b, c, .. } => {
            set_str(&mut spec, "preset", preset);
            set_f64(&mut spec, "kappa", *kappa);
            set_f64(&mut spec, "mu_x", *mu_x);
            set_f64(&mut spec, "sigma_x", *sigma_x);
            set_f64(&mut spec, "theta", *theta);
            set_f64(&mut spec, "phi", *phi);
            set_f64(&mut spec, "b", *b);
            set_f64(&mut spec, "c", *c);
        }
        Cmd::Derivcheck { pairs, seed, eps1, eps2, n, .. } => {
            set_usize(&mut spec, "pairs", *pairs);
            set_usize(&mut spec, "seed", *seed);
            set_f64(&mut spec, "eps1", *eps1);
            set_f64(&mut spec, "eps2", *eps2);
            set_usize(&mut spec, "n", *n);
        }
    }

    if let Some(out) = &common.out {
        spec.output_dir = out.clone();
    } else if let Some(out) = spec.parameters.get("out") {
        spec.output_dir = PathBuf::from(out);
    }
    if let Some(f) = &common.format {
        spec.formats = report::parse_formats(f)?;
    } else if let Some(f) = spec.parameters.get("format") {
        spec.formats = report::parse_formats(&f.clone())?;
    }
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(report::EXIT_USAGE as u8);
        }
    };
    let spec = match build_spec(&cli.command) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("ri: {e}");
            return ExitCode::from(report::exit_code_for(&e) as u8);
        }
    };
    match report::run(&spec) {
        Ok(outcome) => {
            if let Some(finding) = &outcome.finding {
                eprintln!("ri: finding: {finding}");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("ri: {e}");
            ExitCode::from(report::exit_code_for(&e) as u8)
        }
    }
}
