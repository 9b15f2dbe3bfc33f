use clap::Parser;

fn main() {
    let cli = rdlab_cli::Cli::parse();
    std::process::exit(rdlab_cli::run(&cli));
}
