fn main() {
    std::process::exit(dwl_cli::run(std::env::args_os()));
}
