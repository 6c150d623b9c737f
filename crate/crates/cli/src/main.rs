use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tempent_cli::commands::{
    cmd_aggregate, cmd_bench, cmd_detect, cmd_entropy, cmd_spectral_check, cmd_store, cmd_synth, print_json, write_report,
};
use tempent_cli::config::keys_help;
use tempent_cli::{exit_code, ConfigBuilder, RunConfig};

#[derive(Parser)]
#[command(name = "tempent", version, about = "Entropy signals of diffusion on link streams, and change-point benchmarks")]
#[command(after_help = keys_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate benchmark samples or a named toy stream.
    Synth(Common),
    /// Compute entropy signals, one CSV per rate.
    Entropy(Common),
    /// Segment a signal and print the breakpoints as JSON.
    Detect(Common),
    /// Tune on train, evaluate on test, write a JSON report.
    Bench(Common),
    /// Aggregate a stream into snapshots.
    Aggregate(Common),
    /// Eigenvalues of one transition kernel.
    SpectralCheck(Common),
    /// Save per-interval kernels and verify the reload.
    Store(Common),
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    lambdas: Option<String>,
}

impl Common {
    fn build(&self) -> anyhow::Result<RunConfig> {
        let mut b = ConfigBuilder::default();
        if let Some(path) = &self.config {
            b.load_file(path)?;
        }
        for (key, value) in [
            ("input", &self.input),
            ("output", &self.output),
            ("family", &self.family),
            ("seed", &self.seed),
            ("lambdas", &self.lambdas),
        ] {
            if let Some(v) = value {
                b.set(key, v)?;
            }
        }
        for a in &self.set {
            b.assign(a)?;
        }
        b.build()
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth(c) => {
            let path = cmd_synth(&c.build()?)?;
            println!("{}", path.display());
        }
        Command::Entropy(c) => {
            for p in cmd_entropy(&c.build()?)? {
                println!("{}", p.display());
            }
        }
        Command::Detect(c) => {
            let cfg = c.build()?;
            let out = cmd_detect(&cfg)?;
            print_json(&out, if c.output.is_some() { &cfg.output } else { "-" })?;
        }
        Command::Bench(c) => {
            let cfg = c.build()?;
            let report = cmd_bench(&cfg)?;
            write_report(&report, &cfg.output)?;
            for m in &report.methods {
                eprintln!("{:<10} test median {:.3}", m.method, m.test.median);
            }
        }
        Command::Aggregate(c) => {
            let n = cmd_aggregate(&c.build()?)?;
            eprintln!("{n} snapshots");
        }
        Command::SpectralCheck(c) => print_json(&cmd_spectral_check(&c.build()?)?, "-")?,
        Command::Store(c) => print_json(&cmd_store(&c.build()?)?, "-")?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
