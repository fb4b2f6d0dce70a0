fn main() {
    std::process::exit(relosc::cli::run(std::env::args_os()));
}
