fn main() {
    std::process::exit(poslab::cli::run(std::env::args_os()));
}
