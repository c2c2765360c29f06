//! Command-line harness: single solves, figure-reproduction sweeps, and the
//! detection-probability oracle check.
//!
//! Exit codes: 0 success, 2 config parse error, 3 config domain violation,
//! 4 output IO failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use covert_ra::{covert_budget, dep_oracle, min_dep, AOConfig, SchemeRegistry, SystemParams};
use covert_ra_cli::config::{load_config, ConfigError, ExperimentConfig, SweepKind};
use covert_ra_cli::sweep::{derived_seed, emit_csv, format_sig, run_sweep, SplitMix64};

#[derive(Parser)]
#[command(
    name = "covert-ra",
    about = "Covert-rate optimization for rotatable-antenna arrays",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Experiment config file (key = value lines); defaults apply when
    /// omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme on one instance and print a summary.
    Solve {
        #[command(flatten)]
        common: CommonOpts,
        /// Scheme to run (ra, fixed, random, isotropic).
        #[arg(long, default_value = "ra")]
        scheme: String,
    },
    /// Run the configured sweep grid and write a CSV.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Override the config sweep kind (none, convergence, vs_n,
        /// vs_distance).
        #[arg(long)]
        sweep: Option<String>,
        /// Restrict to a single scheme.
        #[arg(long)]
        scheme: Option<String>,
        /// Output CSV path.
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
    },
    /// Compare the closed-form minimum detection error probability against
    /// the grid-search oracle on random draws.
    VerifyDep {
        #[command(flatten)]
        common: CommonOpts,
        /// Number of random (rho, v) draws.
        #[arg(long, default_value_t = 100)]
        draws: usize,
        /// Threshold-grid resolution.
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
    },
}

fn load(common: &CommonOpts) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn config_exit(err: &ConfigError) -> ExitCode {
    eprintln!("{err}");
    match err {
        ConfigError::Parse { .. } | ConfigError::Io(_) => ExitCode::from(2),
        ConfigError::Domain { .. } => ExitCode::from(3),
    }
}

fn cmd_solve(common: CommonOpts, scheme: String) -> ExitCode {
    let cfg = match load(&common) {
        Ok(c) => c,
        Err(e) => return config_exit(&e),
    };
    let params = cfg.system_params();
    let scene = cfg.scene(cfg.nx, cfg.ny, cfg.r_b_m);
    let registry = SchemeRegistry::with_builtins();
    let strategy = match registry.get(&scheme) {
        Some(s) => s,
        None => {
            eprintln!(
                "unknown scheme '{scheme}'; available: {}",
                registry.names().join(", ")
            );
            return ExitCode::from(3);
        }
    };
    let seed = derived_seed(cfg.seed, "solve", &scheme, 0);
    let ao = AOConfig {
        max_iters: cfg.max_iters,
        rel_tol: cfg.rel_tol,
        scheme: scheme.clone(),
        seed,
        init_perturbation: cfg.init_perturbation_rad,
        solver_tol: cfg.solver_tol,
    };
    let result = match strategy.run(&scene, &params, &ao) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("run failed: {e}");
            return ExitCode::from(3);
        }
    };
    let eta = covert_budget(&params).eta;
    println!("scheme            : {scheme} ({})", strategy.describe());
    println!("antennas          : {}", scene.num_antennas());
    println!("wardens           : {}", scene.num_wardens());
    println!("iterations        : {}", result.iterations);
    println!("converged         : {}", result.converged);
    println!(
        "covert rate       : {} bits/s/Hz",
        format_sig(*result.rate_trace.last().unwrap())
    );
    println!(
        "transmit power    : {} W",
        format_sig(result.beamformer.power())
    );
    println!("covert budget eta : {} W", format_sig(eta));
    for (k, v) in result.willie_powers.iter().enumerate() {
        println!(
            "warden {k} leakage  : {} W (ratio {})",
            format_sig(*v),
            format_sig(v / eta)
        );
    }
    println!(
        "rate trace        : [{}]",
        result
            .rate_trace
            .iter()
            .map(|r| format!("{r:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    ExitCode::SUCCESS
}

fn cmd_sweep(
    common: CommonOpts,
    sweep: Option<String>,
    scheme: Option<String>,
    out: PathBuf,
) -> ExitCode {
    let mut cfg = match load(&common) {
        Ok(c) => c,
        Err(e) => return config_exit(&e),
    };
    if let Some(name) = sweep {
        cfg.sweep = match name.as_str() {
            "none" => SweepKind::None,
            "convergence" => SweepKind::Convergence,
            "vs_n" => SweepKind::VsN,
            "vs_distance" => SweepKind::VsDistance,
            other => {
                eprintln!("unknown sweep '{other}'");
                return ExitCode::from(3);
            }
        };
    }
    if let Some(s) = scheme {
        cfg.schemes = vec![s];
    }
    let rows = run_sweep(&cfg);
    if let Err(e) = emit_csv(&rows, &out) {
        eprintln!("failed to write {}: {e}", out.display());
        return ExitCode::from(4);
    }
    println!("wrote {} rows to {}", rows.len(), out.display());
    ExitCode::SUCCESS
}

fn cmd_verify_dep(common: CommonOpts, draws: usize, grid: usize) -> ExitCode {
    let cfg = match load(&common) {
        Ok(c) => c,
        Err(e) => return config_exit(&e),
    };
    let base = cfg.system_params();
    let mut rng = SplitMix64(cfg.seed);
    let mut worst = 0.0f64;
    let mut worst_case = (0.0, 0.0);
    for _ in 0..draws {
        let rho = 1.1 + rng.next_f64() * 2.9;
        let s2 = base.noise_willie_nominal;
        let v = rng.next_f64() * 2.0 * s2 * (rho - 1.0 / rho);
        let params = SystemParams {
            noise_uncertainty: rho,
            ..base.clone()
        };
        let closed = min_dep(v, &params).expect("rho > 1 by construction");
        let oracle = match dep_oracle(v, &params, grid) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("oracle failed: {e}");
                return ExitCode::from(3);
            }
        };
        let diff = (closed - oracle.dep_min).abs();
        if diff > worst {
            worst = diff;
            worst_case = (rho, v);
        }
    }
    println!("draws             : {draws}");
    println!("threshold grid    : {grid}");
    println!("max |closed-form - oracle| : {}", format_sig(worst));
    println!(
        "worst draw        : rho = {}, v = {} W",
        format_sig(worst_case.0),
        format_sig(worst_case.1)
    );
    if worst <= 1e-3 {
        println!("verdict           : PASS (tolerance 1e-3)");
        ExitCode::SUCCESS
    } else {
        println!("verdict           : FAIL (tolerance 1e-3)");
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Solve { common, scheme } => cmd_solve(common, scheme),
        Command::Sweep {
            common,
            sweep,
            scheme,
            out,
        } => cmd_sweep(common, sweep, scheme, out),
        Command::VerifyDep {
            common,
            draws,
            grid,
        } => cmd_verify_dep(common, draws, grid),
    }
}
