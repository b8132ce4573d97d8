fn main() {
    std::process::exit(losstest::cli::run());
}
