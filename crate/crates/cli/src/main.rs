use clap::Parser;
use fingerloc_cli::commands::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = execute(&cli.command) {
        eprintln!("fingerloc: {e}");
        std::process::exit(e.exit_code());
    }
}
