use clap::Parser;
use ergavg_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let outcome = run(&cli);
    if let Some(msg) = outcome.message {
        eprintln!("ergavg: {msg}");
    }
    std::process::exit(outcome.code);
}
