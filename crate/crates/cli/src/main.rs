fn main() {
    std::process::exit(koebe_cli::run(std::env::args_os()));
}
