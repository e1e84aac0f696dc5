fn main() {
    std::process::exit(glauberlearn::cli::main_entry());
}
