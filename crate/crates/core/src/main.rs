fn main() {
    std::process::exit(ssgauss::cli::run(std::env::args_os()));
}
