fn main() {
    std::process::exit(codegemm::cli::main_with_args(std::env::args_os()));
}
