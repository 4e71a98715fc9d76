fn main() {
    std::process::exit(ura_bounds_cli::run::run_command(std::env::args_os()));
}
