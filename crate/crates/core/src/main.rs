fn main() {
    std::process::exit(septangle::cli::main_entry());
}
