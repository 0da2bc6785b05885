fn main() {
    std::process::exit(globalize_service::cli::main_with(std::env::args_os()));
}
