fn main() {
    std::process::exit(scm_cli::main_with_args(std::env::args_os()));
}
