fn main() {
    std::process::exit(epqubits::cli::run(std::env::args_os()));
}
