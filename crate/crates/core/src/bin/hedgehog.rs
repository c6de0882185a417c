fn main() {
    std::process::exit(hedgehog::cli::run(std::env::args()));
}
