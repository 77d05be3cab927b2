use clap::Parser;

fn main() {
    let cli = calnav::cli::Cli::parse();
    if let Err(e) = calnav::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
