fn main() {
    std::process::exit(dscl_core::cli::run(std::env::args_os()));
}
