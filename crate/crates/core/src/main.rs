fn main() {
    std::process::exit(taskmarket::cli::run_cli(std::env::args_os()));
}
