use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;
use willmore_com::config::{ExperimentConfig, ExperimentId};
use willmore_com::experiment::run_experiment;
use willmore_com::flux::{adm_mass, hamiltonian_com, hawking_mass, FluxReport};
use willmore_com::reduced::ReducedEnergy;
use willmore_com::report::emit_report;
use willmore_com::solver::{find_critical_point, stationary_scan, trace_branch};
use willmore_com::Vec3;

/// Reduced Willmore energy and center-of-mass experiments on asymptotically
/// Schwarzschild metrics.
#[derive(Parser, Debug)]
#[command(name = "willmore-com", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Experiment configuration (JSON); supplies the model and numerics.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Take the model and numerics from a registered experiment (E1..E6).
    #[arg(long, global = true)]
    preset: Option<ExperimentId>,
    /// Output directory for reports.
    #[arg(long, global = true, env = "WILLMORE_OUT_DIR")]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Sphere resolution override `n_polar,n_azimuth`.
    #[arg(long, global = true, value_parser = parse_resolution)]
    resolution: Option<(usize, usize)>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// ADM mass flux at radius λ, or the extrapolated report over `--radii`.
    Adm {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// Hamiltonian center of mass at radius λ, or the extrapolated report.
    Com {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// Hawking mass of the coordinate sphere of radius λ about `--center`.
    Hawking {
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_parser = parse_vec3, default_value = "0,0,0")]
        center: Vec3,
    },
    /// Reduced energy and gradient at ξ.
    GEval {
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        xi: Vec3,
    },
    /// Critical points of the reduced energy from the configured seeds.
    CriticalPoint {
        #[arg(long)]
        lambda: f64,
    },
    /// Critical-point branch over the configured λ schedule.
    Trace,
    /// Stationary scan of |∇G| over the configured grid spacing.
    Scan {
        #[arg(long)]
        lambda: f64,
        /// Include every grid point in the output.
        #[arg(long)]
        full: bool,
    },
    /// Run a registered experiment and write its report.
    Experiment { id: ExperimentId },
    /// Print the configuration of a registered experiment.
    ShowConfig { id: ExperimentId },
}

fn parse_resolution(s: &str) -> std::result::Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.trim().parse().map_err(|e| format!("{e}"))?,
            b.trim().parse().map_err(|e| format!("{e}"))?,
        )),
        _ => Err("expected n_polar,n_azimuth".into()),
    }
}

fn parse_vec3(s: &str) -> std::result::Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err("expected three comma-separated numbers".into()),
    }
}

/// Writes a line to stdout; a closed pipe (`| head`) ends output quietly.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    emit(&serde_json::to_string_pretty(v)?)
}

impl Global {
    /// The configuration every subcommand works from.
    fn config(&self, fallback: ExperimentId) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            (None, Some(id)) => ExperimentConfig::preset(id),
            (None, None) => ExperimentConfig::preset(fallback),
        };
        if let Some((np, na)) = self.resolution {
            cfg.resolution.n_polar = np;
            cfg.resolution.n_azimuth = na;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Adm { lambda, radii } => {
            let cfg = g.config(ExperimentId::E1)?;
            match lambda {
                Some(l) => print_json(&serde_json::json!({
                    "lambda": l,
                    "mass": adm_mass(&cfg.model, *l, &cfg.resolution)?,
                }))?,
                None => print_json(&flux_report(&cfg, radii)?)?,
            }
        }
        Command::Com { lambda, radii } => {
            let cfg = g.config(ExperimentId::E1)?;
            match lambda {
                Some(l) => {
                    let m = adm_mass(&cfg.model, *l, &cfg.resolution)?;
                    let c = hamiltonian_com(&cfg.model, *l, m, &cfg.resolution)?;
                    print_json(&serde_json::json!({
                        "lambda": l,
                        "mass": m,
                        "center": [c[0], c[1], c[2]],
                    }))?
                }
                None => print_json(&flux_report(&cfg, radii)?)?,
            }
        }
        Command::Hawking { lambda, center } => {
            let cfg = g.config(ExperimentId::E1)?;
            let m = hawking_mass(&cfg.model, center, *lambda, &cfg.resolution)?;
            print_json(&serde_json::json!({
                "lambda": lambda,
                "center": [center[0], center[1], center[2]],
                "hawking_mass": m,
            }))?;
        }
        Command::GEval { lambda, xi } => {
            let cfg = g.config(ExperimentId::E1)?;
            let e = ReducedEnergy::new(&cfg.model, *lambda, cfg.solver_options().reduced)?;
            print_json(&e.evaluate(xi)?)?;
        }
        Command::CriticalPoint { lambda } => {
            let cfg = g.config(ExperimentId::E1)?;
            let s = find_critical_point(
                &cfg.model,
                *lambda,
                cfg.delta,
                &cfg.seeds(),
                &cfg.solver_options(),
            )?;
            print_json(&s)?;
        }
        Command::Trace => {
            let cfg = g.config(ExperimentId::E1)?;
            let t = trace_branch(
                &cfg.model,
                &cfg.lambdas.values(),
                cfg.delta,
                &cfg.seeds(),
                &cfg.solver_options(),
            )?;
            print_json(&t)?;
        }
        Command::Scan { lambda, full } => {
            let cfg = g.config(ExperimentId::E1)?;
            let mut s = stationary_scan(
                &cfg.model,
                *lambda,
                cfg.delta,
                cfg.scan_spacing,
                &cfg.solver_options(),
            )?;
            if !full {
                s.grid.clear();
            }
            print_json(&s)?;
        }
        Command::Experiment { id } => {
            let mut cfg = g.config(*id)?;
            if cfg.id != *id {
                bail!("config is for {} but {} was requested", cfg.id, id);
            }
            // The echoed config leaves out where it was written, so reports
            // from different directories compare equal.
            let dir = cfg
                .out_dir
                .take()
                .unwrap_or_else(|| PathBuf::from("results").join(id.to_string()));
            let result = run_experiment(&cfg)?;
            let files = emit_report(&result, &dir)?;
            for a in &result.assertions {
                emit(&format!(
                    "{} {} = {:e} ({} {:e})",
                    if a.passed { "PASS" } else { "FAIL" },
                    a.name,
                    a.measured,
                    a.comparison,
                    a.tolerance
                ))?;
            }
            info!("report written to {}", files.result_json.display());
            emit(&format!(
                "{}: {}",
                id,
                if result.passed() {
                    "all assertions passed"
                } else {
                    "assertions failed"
                }
            ))?;
            return Ok(result.passed());
        }
        Command::ShowConfig { id } => {
            emit(&ExperimentConfig::preset(*id).to_json()?)?;
        }
    }
    Ok(true)
}

fn flux_report(cfg: &ExperimentConfig, radii: &[f64]) -> Result<FluxReport> {
    let radii = if radii.is_empty() {
        &cfg.flux_radii[..]
    } else {
        radii
    };
    Ok(FluxReport::compute(&cfg.model, radii, &cfg.resolution)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
