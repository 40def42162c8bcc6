fn main() {
    std::process::exit(pulsegrid::cli::run_subcommand(std::env::args_os()));
}
