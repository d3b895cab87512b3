fn main() {
    std::process::exit(entrex::cli::run());
}
