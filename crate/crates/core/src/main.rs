fn main() {
    std::process::exit(jcas::cli::run_cli(std::env::args_os()));
}
