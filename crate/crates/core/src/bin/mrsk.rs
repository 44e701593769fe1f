fn main() {
    std::process::exit(mrsk_core::cli::run_cli(std::env::args_os()));
}
