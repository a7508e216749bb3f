fn main() {
    std::process::exit(frametv::cli::run(std::env::args_os()));
}
