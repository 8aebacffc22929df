fn main() {
    std::process::exit(hrrt_cli::cli::run(std::env::args_os()));
}
