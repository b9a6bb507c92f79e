fn main() {
    std::process::exit(compfront::cli::main_with_args(std::env::args_os()));
}
