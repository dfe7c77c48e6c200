fn main() {
    std::process::exit(milrec::cli::main());
}
