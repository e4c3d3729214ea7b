fn main() {
    std::process::exit(nidlab::cli::run(std::env::args_os()));
}
