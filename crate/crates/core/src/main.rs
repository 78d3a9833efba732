fn main() {
    std::process::exit(parthenos::cli::run_cli(std::env::args_os()));
}
