fn main() {
    std::process::exit(chaoscalc::cli::run(std::env::args_os()));
}
