fn main() {
    std::process::exit(sgm_cli::main_with_std());
}
