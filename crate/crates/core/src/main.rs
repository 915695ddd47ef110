fn main() {
    std::process::exit(orbitlab::cli::run(std::env::args_os()));
}
