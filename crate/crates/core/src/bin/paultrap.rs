fn main() {
    std::process::exit(paultrap::cli::main_from(std::env::args_os()));
}
