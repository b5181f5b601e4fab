fn main() {
    std::process::exit(fbcsp::cli::run(std::env::args_os()));
}
