fn main() {
    std::process::exit(radcom_cli::main_with_args(std::env::args_os()));
}
