fn main() {
    std::process::exit(discoqad::cli::run(std::env::args_os()));
}
