fn main() {
    std::process::exit(lipbandit::cli::run(std::env::args_os()));
}
