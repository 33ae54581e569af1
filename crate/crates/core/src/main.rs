use clap::Parser;

fn main() {
    let cli = boson_ness::cli::Cli::parse();
    std::process::exit(boson_ness::cli::run(&cli));
}
