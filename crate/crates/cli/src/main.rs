use clap::Parser;

fn main() {
    let cli = pixtile_cli::Cli::parse();
    if let Err(e) = pixtile_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(pixtile_cli::exit_code(&e));
    }
}
