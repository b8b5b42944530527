fn main() {
    std::process::exit(ncfree_cli::run(std::env::args_os()));
}
