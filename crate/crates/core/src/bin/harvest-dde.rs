fn main() {
    harvest_dde::cli::init_logging();
    std::process::exit(harvest_dde::cli::run(std::env::args_os()));
}
