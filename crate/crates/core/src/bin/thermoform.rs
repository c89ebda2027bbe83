fn main() {
    std::process::exit(thermoform::cli::main_with_args(std::env::args_os()));
}
