fn main() {
    std::process::exit(dphase_cli::cli::main_with(std::env::args_os()));
}
