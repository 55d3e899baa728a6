fn main() {
    std::process::exit(gme_cli::run(std::env::args_os()));
}
