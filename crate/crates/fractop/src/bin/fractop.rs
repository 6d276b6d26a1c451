fn main() {
    std::process::exit(fractop::cli::main());
}
