fn main() {
    std::process::exit(chaincrf::cli::run(std::env::args_os()));
}
