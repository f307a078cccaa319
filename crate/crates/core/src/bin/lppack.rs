use clap::Parser;

fn main() {
    let cli = lppack::cli::Cli::parse();
    if let Err(err) = lppack::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(lppack::cli::exit_code(&err));
    }
}
