fn main() {
    std::process::exit(dark_pairing::cli::main_from(std::env::args_os()));
}
