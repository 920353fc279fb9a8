fn main() {
    std::process::exit(lchs::cli::run());
}
