fn main() {
    std::process::exit(attrec::cli::main());
}
