fn main() {
    std::process::exit(serkit::cli::run(std::env::args_os()));
}
