fn main() {
    std::process::exit(z2flow::cli::run());
}
