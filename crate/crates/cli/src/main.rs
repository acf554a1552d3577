use clap::Parser;
use sgrif_cli::cli::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SGRIF_LOG", "warn")).init();
    std::process::exit(execute(Cli::parse()));
}
