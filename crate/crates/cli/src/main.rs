fn main() {
    std::process::exit(drivenchain_cli::run(std::env::args_os()));
}
