fn main() {
    std::process::exit(tbsteer::cli::run(std::env::args_os()));
}
