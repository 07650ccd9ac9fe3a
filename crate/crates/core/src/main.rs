fn main() {
    std::process::exit(permorb::cli::main_with_args(std::env::args_os()));
}
