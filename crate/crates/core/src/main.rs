fn main() {
    std::process::exit(cvclone::cli::main_with_args(std::env::args_os()));
}
