fn main() {
    std::process::exit(ifsdist::cli::run(std::env::args_os()));
}
