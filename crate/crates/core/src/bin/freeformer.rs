fn main() {
    std::process::exit(freeformer::cli::main_entry());
}
