fn main() {
    std::process::exit(zslice::cli::run());
}
