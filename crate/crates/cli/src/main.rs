use clap::Parser;
use hybridnet_cli::{run, Cli};

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    run(cli, std::env::args().collect())
}
