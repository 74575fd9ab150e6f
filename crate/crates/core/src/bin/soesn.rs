fn main() {
    std::process::exit(soesn::cli::main_with_args(std::env::args_os()));
}
