fn main() {
    std::process::exit(mjp_poisson::cli::run(std::env::args_os()));
}
