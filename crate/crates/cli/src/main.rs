fn main() {
    std::process::exit(abspec_cli::run(std::env::args_os()));
}
