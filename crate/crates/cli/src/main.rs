fn main() {
    std::process::exit(spheregp_cli::cli_main(std::env::args_os()));
}
