fn main() {
    std::process::exit(sign_balance::cli::run_cli(std::env::args_os()));
}
