fn main() {
    std::process::exit(hypercross::cli::main_with_args(std::env::args_os()));
}
