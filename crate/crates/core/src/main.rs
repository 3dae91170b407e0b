use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qhmetric::models::ToyModel;
use qhmetric::report::{
    parse_kappa_list, parse_rho_list, run, CommandKind, ConfigError, Figure, OutputFormat,
    RunConfig, RunError,
};

#[derive(Parser, Debug)]
#[command(
    name = "qhmetric",
    version,
    about = "Metric operators for quasi-Hermitian toy models"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Model: `two` or `four`.
    #[arg(long, global = true)]
    model: Option<ToyModel>,
    /// Comma-separated list of rho values; `a..b` ranges are inclusive.
    #[arg(long, global = true)]
    rho: Option<String>,
    #[arg(long = "t-min", global = true, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long = "t-max", global = true, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long = "t-step", global = true)]
    t_step: Option<f64>,
    /// Classification tolerance; for `verify`, overrides every threshold.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Bisection width for `boundary`.
    #[arg(long = "tol-t", global = true)]
    tol_t: Option<f64>,
    /// Figure preset for `metric-scan`: 1, 2 or 3.
    #[arg(long, global = true)]
    figure: Option<Figure>,
    /// Comma-separated weights replacing the reference metric.
    #[arg(long, global = true)]
    kappa: Option<String>,
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: QHMETRIC_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Energies of H(t) on a grid.
    Spectrum,
    /// Metric eigenvalue traces with regime labels.
    MetricScan,
    /// Ends of the unitarity intervals.
    Boundary,
    /// Smallest eigenvalue gap of H near a point.
    EpProbe {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        center: f64,
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
    },
    /// Time-dependent evolution with the Coriolis-corrected generator.
    Evolve {
        #[arg(long, default_value_t = 2000)]
        steps: usize,
    },
    /// Built-in invariant checks; exit status 1 if any fails.
    Verify {
        /// Check quasi-Hermiticity of the two-level model against the identity at t = 0.5.
        #[arg(long)]
        inject_identity_metric: bool,
    },
}

fn build_config(cli: Cli) -> Result<RunConfig, ConfigError> {
    let command = match &cli.command {
        Cmd::Spectrum => CommandKind::Spectrum,
        Cmd::MetricScan => CommandKind::MetricScan,
        Cmd::Boundary => CommandKind::Boundary,
        Cmd::EpProbe { .. } => CommandKind::EpProbe,
        Cmd::Evolve { .. } => CommandKind::Evolve,
        Cmd::Verify { .. } => CommandKind::Verify,
    };
    let mut cfg = RunConfig::defaults(command);
    if let Some(fig) = cli.figure {
        if command != CommandKind::MetricScan {
            return Err(ConfigError("--figure only applies to metric-scan".into()));
        }
        cfg.apply_figure(fig);
    }
    match cli.command {
        Cmd::EpProbe { center, radius } => {
            cfg.center = center;
            cfg.radius = radius;
        }
        Cmd::Evolve { steps } => cfg.steps = steps,
        Cmd::Verify {
            inject_identity_metric,
        } => cfg.inject_identity_metric = inject_identity_metric,
        _ => {}
    }
    if let Some(m) = cli.model {
        cfg.model = m;
    }
    if let Some(r) = cli.rho {
        cfg.rhos = parse_rho_list(&r)?;
    }
    if let Some(k) = cli.kappa {
        cfg.kappa = Some(parse_kappa_list(&k)?);
    }
    cfg.t_min = cli.t_min.unwrap_or(cfg.t_min);
    cfg.t_max = cli.t_max.unwrap_or(cfg.t_max);
    cfg.t_step = cli.t_step.unwrap_or(cfg.t_step);
    cfg.tol = cli.tol.or(cfg.tol);
    cfg.tol_t = cli.tol_t.unwrap_or(cfg.tol_t);
    cfg.format = cli.format.unwrap_or(cfg.format);
    cfg.out = cli.out;
    cfg.threads = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var("QHMETRIC_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| ConfigError(format!("invalid QHMETRIC_THREADS `{v}`")))?,
            ),
            Err(_) => None,
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {}", e.to_string().replace('\n', " "));
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            return fail(&RunError::Config(ConfigError(first.to_string())));
        }
    };
    let cfg = match build_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e.into()),
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return fail(&RunError::Runtime(e.to_string()));
        }
    }
    let output = match run(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &output.text),
        None => std::io::stdout().write_all(output.text.as_bytes()),
    };
    if let Err(e) = written {
        // A closed downstream pipe (e.g. `| head`) is not an error.
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return ExitCode::SUCCESS;
        }
        return fail(&RunError::Runtime(e.to_string()));
    }
    if output.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
