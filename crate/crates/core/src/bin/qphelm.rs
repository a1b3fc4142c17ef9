use clap::Parser;

fn main() {
    let cli = qphelm::cli::Cli::parse();
    std::process::exit(qphelm::cli::run(cli));
}
