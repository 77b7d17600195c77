fn main() {
    std::process::exit(mcci::cli::run())
}
