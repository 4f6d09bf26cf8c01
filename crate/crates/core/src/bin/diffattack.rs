fn main() {
    std::process::exit(diffattack::cli::run(std::env::args_os()));
}
