fn main() {
    std::process::exit(aerialscan::cli::main_with_std());
}
