fn main() {
    std::process::exit(greenldp::cli::run(std::env::args_os()));
}
