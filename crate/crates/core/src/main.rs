mod cli;

use clap::Parser;

fn main() {
    let args = cli::Cli::parse();
    match cli::execute(args) {
        Ok(out) => print!("{out}"),
        Err(f) => {
            eprintln!("error: {}", f.message());
            std::process::exit(f.code());
        }
    }
}
