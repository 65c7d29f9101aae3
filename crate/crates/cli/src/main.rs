use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};

use clap::{Args, Parser, Subcommand};

use floqsym_cli::config::RunConfig;
use floqsym_cli::runner::{self, Command as RunCommand, EXIT_CONFIG, EXIT_IO};

static CANCELLED: AtomicBool = AtomicBool::new(false);

extern "C" fn on_sigint(_sig: libc::c_int) {
    // Only the flag store is allowed here; the sweep loop notices it
    // between grid points and flushes a truncated table.
    CANCELLED.store(true, Ordering::SeqCst);
}

#[derive(Parser)]
#[command(
    name = "floqsym",
    about = "Periodic steady states, Floquet decompositions, and symmetry/orthogonality measures for oscillator ODEs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Args)]
struct Common {
    /// Run configuration file (line-oriented key = value sections).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; 0 uses all cores.
    #[arg(long, env = "FLOQSYM_JOBS")]
    jobs: Option<usize>,
    /// Model preset (overrides model.preset).
    #[arg(long)]
    preset: Option<String>,
    /// Override any config key, e.g. --set c0=1.5 or --set solver.rtol=1e-8.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Commands {
    /// Solve the periodic steady state and write the orbit artifacts.
    Pss(Common),
    /// Solve and decompose: multipliers, exponents, mode diagnostics.
    Floquet(Common),
    /// Full analysis: print and store the symmetry/orthogonality measures.
    Measures(Common),
    /// Grid sweep producing measure tables, contour data, and plots.
    Sweep(Common),
    /// Derivative-free minimization of the symmetry measure.
    Search(Common),
}

fn main() {
    unsafe {
        libc::signal(libc::SIGINT, on_sigint as *const () as libc::sighandler_t);
    }
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Commands::Pss(c) => (RunCommand::Pss, c),
        Commands::Floquet(c) => (RunCommand::Floquet, c),
        Commands::Measures(c) => (RunCommand::Measures, c),
        Commands::Sweep(c) => (RunCommand::Sweep, c),
        Commands::Search(c) => (RunCommand::Search, c),
    };

    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("floqsym: cannot read config {}: {e}", common.config.display());
            std::process::exit(EXIT_IO);
        }
    };
    let (cfg, warnings) = match RunConfig::resolve(
        &text,
        common.preset.as_deref(),
        &common.set,
        common.out,
        common.jobs,
    ) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("floqsym: {e}");
            std::process::exit(EXIT_CONFIG);
        }
    };
    for w in warnings {
        eprintln!("floqsym: warning: {w}");
    }

    std::process::exit(runner::run(command, &cfg, &CANCELLED));
}
