fn main() {
    std::process::exit(spectral_clt::cli::run(std::env::args_os()));
}
