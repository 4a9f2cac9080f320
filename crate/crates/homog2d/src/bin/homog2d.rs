use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use homog2d::study::{
    cell_text, emit_outputs, parse_config, probe_text, run_cell, run_probe, run_solve, run_study, solve_text,
    StudyConfig,
};

#[derive(Parser)]
#[command(name = "homog2d", version, about = "Periodic homogenization studies for 2D semilinear problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cell problems and the homogenized tensor only.
    Cell(Args),
    /// Homogenized solve with its nondegeneracy check.
    Solve(Args),
    /// Full sweep over the configured periods.
    Study(Args),
    /// Local uniqueness probe at one period.
    Probe(Args),
}

#[derive(clap::Args)]
struct Args {
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed, overriding `output.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Neither read nor write the corrector cache.
    #[arg(long)]
    no_cache: bool,
    #[arg(long, value_enum)]
    variant: Option<Variant>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Smoothed,
    Direct,
}

fn load(args: &Args) -> homog2d::Result<StudyConfig> {
    let mut config = parse_config(&args.config)?;
    if let Some(dir) = &args.out {
        config.output.dir = dir.clone();
    }
    if let Some(seed) = args.seed {
        config.output.seed = seed;
    }
    if args.no_cache {
        config.output.cache = false;
    }
    if let Some(v) = args.variant {
        config.study.variant = match v {
            Variant::Smoothed => homog2d::study::VariantName::Smoothed,
            Variant::Direct => homog2d::study::VariantName::Direct,
        };
    }
    Ok(config)
}

fn write(dir: &Path, name: &str, text: &str) -> homog2d::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// Exit status: 0 when everything converged, 2 when some work failed.
fn run(cli: Cli) -> homog2d::Result<u8> {
    match cli.command {
        Command::Cell(args) => {
            let config = load(&args)?;
            let cell = run_cell(&config, config.output.cache)?;
            let text = cell_text(&cell);
            write(&config.output.dir, "cell.txt", &text)?;
            print!("{text}");
            Ok(0)
        }
        Command::Solve(args) => {
            let config = load(&args)?;
            let rep = run_solve(&config, config.output.cache)?;
            let text = solve_text(&rep);
            write(&config.output.dir, "solve.txt", &text)?;
            print!("{text}");
            Ok(if rep.homogenized.newton.converged { 0 } else { 2 })
        }
        Command::Study(args) => {
            let config = load(&args)?;
            let report = run_study(&config, config.output.cache)?;
            for path in emit_outputs(&report, &config.output.dir)? {
                eprintln!("wrote {}", path.display());
            }
            print!("{}", homog2d::study::study_text(&report));
            Ok(if report.all_converged() { 0 } else { 2 })
        }
        Command::Probe(args) => {
            let config = load(&args)?;
            let summary = run_probe(&config, config.output.cache)?;
            let text = probe_text(&summary);
            write(&config.output.dir, "probe.txt", &text)?;
            print!("{text}");
            Ok(if summary.report.all_agree { 0 } else { 2 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
