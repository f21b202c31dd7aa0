fn main() {
    std::process::exit(ooskit::cli::main());
}
