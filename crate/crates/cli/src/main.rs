use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use floquet_phase::config::RunConfig;
use floquet_phase::{analysis, report, scan};

#[derive(Parser)]
#[command(name = "floquet-phase", version, about = "Berry phases of periodic harmonic oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override the relative ODE tolerance.
    #[arg(long, global = true)]
    tol_ode_rel: Option<f64>,

    /// Override the absolute quadrature tolerance.
    #[arg(long, global = true)]
    tol_quad: Option<f64>,

    /// Accepted for scripting symmetry; nothing here is random.
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the system and compute phases for the configured levels.
    Analyze {
        config: PathBuf,
        /// Directory for report and table files; the report goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Stability scan over the two parameters of the [scan] block.
    Scan {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

fn load(cli: &Cli, path: &Path) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(v) = cli.tol_ode_rel {
        cfg.tolerances.ode_rel = v;
    }
    if let Some(v) = cli.tol_quad {
        cfg.tolerances.quad_abs = v;
    }
    cfg.tolerances().validate().context("tolerance override out of range")?;
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Analyze { config, out, format } => {
            let cfg = load(cli, config)?;
            let (result, state) = analysis::analyze(&cfg)?;
            let (text, ext) = match format {
                Format::Json => (report::to_json(&result)?, "json"),
                Format::Text => (report::to_text(&result), "txt"),
            };
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
                    let path = dir.join(format!("report.{ext}"));
                    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
                    if let (true, Some(state)) = (cfg.output.psi_tables, &state) {
                        report::write_psi_tables(
                            dir,
                            state,
                            &cfg.n,
                            cfg.output.psi_times,
                            cfg.output.psi_points,
                            cfg.grid.width_factor,
                            cfg.tolerances.quad_abs,
                        )?;
                    }
                }
                None => print!("{text}"),
            }
            if let Some(reason) = &result.verdict.reason {
                eprintln!("Berry phase undefined: {reason}");
            }
            Ok(result.exit_code() as u8)
        }
        Command::Scan { config, out } => {
            let cfg = load(cli, config)?;
            let rows = scan::run_scan(&cfg)?;
            let file = std::fs::File::create(out).with_context(|| format!("cannot create {}", out.display()))?;
            scan::write_csv(&cfg, &rows, std::io::BufWriter::new(file))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // clap's own usage-error code (2) would collide with "phase undefined"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
