fn main() {
    std::process::exit(hent::cli::run(std::env::args_os()));
}
