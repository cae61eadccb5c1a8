fn main() {
    std::process::exit(depthstream::cli::main_with_args(std::env::args_os()));
}
