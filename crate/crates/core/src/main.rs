fn main() {
    std::process::exit(siqa::cli::run(std::env::args_os()));
}
