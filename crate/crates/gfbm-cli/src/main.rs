mod args;
mod commands;
mod runctx;
mod svg;

use clap::Parser;

fn main() {
    let cli = args::Cli::parse();
    match commands::run(cli) {
        Ok(()) => {}
        Err(e) => {
            if e.downcast_ref::<commands::UsageError>().is_some() {
                eprintln!("error: {e}");
                std::process::exit(2);
            }
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
