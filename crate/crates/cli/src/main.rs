fn main() {
    std::process::exit(aos_cli::cli_main(std::env::args_os()));
}
