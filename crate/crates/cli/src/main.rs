fn main() {
    std::process::exit(gecodes_cli::run(std::env::args_os()));
}
