use clap::Parser;

fn main() {
    let cli = cakecut::cli::Cli::parse();
    std::process::exit(cakecut::cli::run(cli));
}
