use clap::Parser;

fn main() {
    let cli = papsim::Cli::parse();
    std::process::exit(papsim::run_cli(&cli));
}
