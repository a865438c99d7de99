fn main() {
    std::process::exit(fadopt::cli::main_with_args(std::env::args().collect()));
}
