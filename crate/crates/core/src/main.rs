use clap::Parser;
use gazekit::commands::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
