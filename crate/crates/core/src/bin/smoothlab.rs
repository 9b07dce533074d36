fn main() {
    std::process::exit(smoothlab::cli::main_with_args(std::env::args()));
}
