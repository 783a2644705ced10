fn main() {
    std::process::exit(bearnav::cli::main());
}
