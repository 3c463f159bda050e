fn main() {
    std::process::exit(femkit::cli::cli_main(std::env::args_os()));
}
