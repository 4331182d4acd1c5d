fn main() {
    piemu::cli::run();
}
