fn main() {
    std::process::exit(fermicorr::cli::main_with_args(std::env::args_os()));
}
