fn main() {
    std::process::exit(oppsched::cli::run_cli(std::env::args_os()));
}
