fn main() {
    std::process::exit(cayley_diffusion::cli::run(std::env::args_os()));
}
