fn main() {
    std::process::exit(nvscope_cli::run_cli(std::env::args_os()));
}
