fn main() {
    std::process::exit(rlchs::cli::main_with_args(std::env::args_os()));
}
