use clap::Parser;
use dstm::cli::{init_workers, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = init_workers() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
    std::process::exit(run(cli));
}
