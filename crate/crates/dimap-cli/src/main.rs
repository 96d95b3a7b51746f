fn main() {
    std::process::exit(dimap_cli::run());
}
