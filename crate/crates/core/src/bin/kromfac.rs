fn main() {
    std::process::exit(kromfac::cli::run_command(std::env::args_os()));
}
