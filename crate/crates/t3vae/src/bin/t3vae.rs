use clap::Parser;

fn main() {
    let cli = t3vae::cli::Cli::parse();
    if let Err(e) = t3vae::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
