fn main() {
    std::process::exit(cfpm::cli::main_with(std::env::args_os()));
}
