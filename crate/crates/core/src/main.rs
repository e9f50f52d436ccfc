fn main() {
    std::process::exit(ineqcert::cli::run_cli(std::env::args_os()));
}
