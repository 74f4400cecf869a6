fn main() {
    std::process::exit(hogpipe::cli::main_with_args(std::env::args_os()));
}
