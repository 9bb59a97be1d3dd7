use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use husimi_cli::{Experiment, Invocation, Overrides};

#[derive(Parser)]
#[command(name = "husimi-dyn", version, about = "Phase-space dynamics of non-Hermitian quasiperiodic lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Wave-packet spreading on the finite lattice.
    Lattice(Common),
    /// Quantum Husimi fields.
    Qhusimi(Common),
    /// Semiclassical Husimi fields.
    Chusimi(Common),
    /// Fixed points and trajectories of the classical flow.
    Portrait(Common),
    /// Critical potential and separatrix quantities.
    Critical(Common),
    /// Spreading velocity against a swept parameter.
    Vsweep(Common),
    /// Quantum against semiclassical spreading.
    Compare(Common),
    /// Husimi purity over time.
    Purity(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (HUSIMI_DYN_OUT takes precedence).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    #[arg(long, value_name = "X")]
    dt: Option<f64>,
    #[arg(long, value_name = "N")]
    fock_dim: Option<usize>,
    #[arg(long, value_name = "L")]
    lattice_size: Option<usize>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, c) = match cli.command {
        Command::Lattice(c) => (Experiment::LatticeTransport, c),
        Command::Qhusimi(c) => (Experiment::QuantumHusimi, c),
        Command::Chusimi(c) => (Experiment::ClassicalHusimi, c),
        Command::Portrait(c) => (Experiment::PhasePortrait, c),
        Command::Critical(c) => (Experiment::CriticalPoint, c),
        Command::Vsweep(c) => (Experiment::VSweep, c),
        Command::Compare(c) => (Experiment::Compare, c),
        Command::Purity(c) => (Experiment::PurityScan, c),
    };
    let inv = Invocation {
        command,
        config_path: c.config,
        overrides: Overrides { out: c.out, dt: c.dt, fock_dim: c.fock_dim, lattice_size: c.lattice_size },
        workers: c.workers,
    };
    std::process::exit(husimi_cli::run(&inv));
}
