use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spike_cluster::cli_io::{run, Command, GlobalOptions};

#[derive(Parser)]
#[command(name = "spike-cluster", version, about = "Sign-changing spike clusters: profile, reduced model, PDE checks")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// TOML run configuration, or a previous run manifest (.json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fail with a cache miss instead of solving the ground state.
    #[arg(long, global = true)]
    cache_only: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Solve (or load) the ground state and write its summary.
    Profile,
    /// c1, c2, c3, c4, A and w(0) as JSON.
    Constants,
    /// Reduced-energy landscape over the configured family.
    Reduce,
    /// Critical points of the reduced energy from chain seeds.
    Search,
    /// Max-min sampling statistics.
    Maxmin,
    /// Full PDE solve seeded at the reduced critical point.
    Pde,
    /// Projected correction at the reduced critical point along the ladder.
    Lsreduce,
    /// Energy-expansion ladder for the canonical pair.
    ExpansionTest,
    /// Balance-kernel search for unit-distance equilibria.
    LemmaCheck,
}

impl From<Verb> for Command {
    fn from(v: Verb) -> Command {
        match v {
            Verb::Profile => Command::Profile,
            Verb::Constants => Command::Constants,
            Verb::Reduce => Command::Reduce,
            Verb::Search => Command::Search,
            Verb::Maxmin => Command::Maxmin,
            Verb::Pde => Command::Pde,
            Verb::Lsreduce => Command::Lsreduce,
            Verb::ExpansionTest => Command::ExpansionTest,
            Verb::LemmaCheck => Command::LemmaCheck,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = GlobalOptions {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        threads: cli.threads,
        cache_only: cli.cache_only,
    };
    let command = Command::from(cli.verb);
    match run(command, &opts) {
        Ok(m) => {
            for s in &m.stages {
                for o in &s.outputs {
                    println!("{o}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("spike-cluster {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
