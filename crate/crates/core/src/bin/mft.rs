fn main() {
    std::process::exit(mft::cli::main_with_args(std::env::args_os()));
}
