fn main() {
    std::process::exit(negmc::cli::main());
}
