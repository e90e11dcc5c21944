fn main() {
    std::process::exit(sigma::cli::run(std::env::args_os()));
}
