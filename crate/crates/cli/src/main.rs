use clap::Parser;
use viser_cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
