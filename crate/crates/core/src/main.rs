fn main() {
    std::process::exit(maxineq::cli::main_with_args(std::env::args_os()));
}
