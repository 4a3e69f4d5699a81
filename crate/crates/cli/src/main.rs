use clap::Parser;

fn main() {
    let cli = semalloc_cli::Cli::parse();
    std::process::exit(semalloc_cli::run(cli));
}
