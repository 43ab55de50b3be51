fn main() {
    std::process::exit(gapnv::cli::main());
}
