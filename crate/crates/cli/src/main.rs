use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lininv_core::presets;
use lininv_core::runner::{emit::emit, exit_code, run, Overrides, Scenario, EXIT_ERROR};
use lininv_core::spectral::{summarize, LogBase};

#[derive(Parser)]
#[command(name = "lininv", version, about = "Invariance entropy experiments for linear systems on Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Greedy,
    Exact,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its tables and summary.
    Run {
        scenario: PathBuf,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Logarithm base: 2 or e.
        #[arg(long)]
        log_base: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Cap on trajectory evaluations per spanning computation.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Built-in systems.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

fn run_command(
    path: PathBuf,
    out: Option<PathBuf>,
    mode: Option<Mode>,
    log_base: Option<String>,
    seed: Option<u64>,
    budget: Option<u64>,
) -> i32 {
    let overrides = Overrides {
        mode: mode.map(|m| match m {
            Mode::Greedy => "greedy".to_string(),
            Mode::Exact => "exact".to_string(),
        }),
        log_base,
        seed,
        budget,
    };
    let scenario = match Scenario::from_path(&path, &overrides) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_ERROR;
        }
    };
    let outcome = run(&scenario);
    let report = match &outcome {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&outcome);
        }
    };
    let dir = out.unwrap_or_else(|| PathBuf::from("out").join(&report.name));
    if let Err(e) = emit(report, &dir) {
        eprintln!("error: writing {}: {e}", dir.display());
        return EXIT_ERROR;
    }
    println!("scenario {} ({} on {})", report.name, report.system, report.group);
    println!(
        "bowen bound: {} (base 2), {} (base e)",
        report.spectral.bowen_base2, report.spectral.bowen_nats
    );
    if let Some(note) = &report.spectral.log_base_note {
        println!("log base: {note}");
    }
    if let Some(note) = &report.quotient.note {
        println!("quotient: {note}");
    }
    for f in &report.fits {
        println!(
            "fit eps={}: slope {:.4} [{:.4}, {:.4}] (base {})",
            f.eps,
            f.fit.slope,
            f.fit.ci_low,
            f.fit.ci_high,
            f.fit.base.label()
        );
    }
    for v in &report.verdicts {
        println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    println!("wrote {}", dir.display());
    report.exit_code()
}

fn show_preset(name: &str) -> i32 {
    let Some(sys) = presets::by_name(name) else {
        eprintln!("error: unknown preset {name:?}");
        return EXIT_ERROR;
    };
    println!("{name}: {}", presets::describe(name).unwrap_or(""));
    println!("group: {}", sys.group.name());
    println!("alphabet size: {}", sys.control.alphabet().len());
    match summarize(&sys, &Default::default()) {
        Ok(s) => {
            for e in &s.split.spectrum.eigenvalues {
                println!("eigenvalue: {} + {}i (multiplicity {})", e.re, e.im, e.multiplicity);
            }
            let (p, z, m) = s.split.dims();
            println!("dims (unstable, center, stable): ({p}, {z}, {m})");
            println!(
                "bowen bound: {} (base 2), {} (base e)",
                s.bowen_base2,
                LogBase::E.from_nats(s.bowen_nats)
            );
            println!("stable subgroup closed: {}", s.closedness.is_closed());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { scenario, out, mode, log_base, seed, budget } => run_command(scenario, out, mode, log_base, seed, budget),
        Command::Presets { action: PresetAction::List } => {
            for name in presets::PRESET_NAMES {
                println!("{name}\t{}", presets::describe(name).unwrap_or(""));
            }
            0
        }
        Command::Presets { action: PresetAction::Show { name } } => show_preset(&name),
    };
    ExitCode::from(code as u8)
}
