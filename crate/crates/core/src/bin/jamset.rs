fn main() {
    std::process::exit(jamset::cli::main_with_args(std::env::args_os()));
}
