fn main() {
    std::process::exit(memsx_cli::run(std::env::args_os()));
}
