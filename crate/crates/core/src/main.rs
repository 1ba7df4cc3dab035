fn main() {
    std::process::exit(lapsrn::cli::run(std::env::args_os()));
}
