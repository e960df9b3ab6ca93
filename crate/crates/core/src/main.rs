fn main() {
    std::process::exit(epida::pipeline::cli::run_cli(std::env::args_os()));
}
