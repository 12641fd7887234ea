fn main() {
    std::process::exit(dcftrack_core::cli::main_with_args(std::env::args_os()));
}
