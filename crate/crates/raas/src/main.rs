use clap::Parser;

fn main() {
    let cli = raas::cli::Cli::parse();
    if let Err(e) = raas::cli::execute(cli) {
        eprintln!("error: {}", e);
        std::process::exit(e.exit_code());
    }
}
