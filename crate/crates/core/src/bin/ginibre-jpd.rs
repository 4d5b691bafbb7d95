fn main() {
    std::process::exit(ginibre_jpd::cli::run(std::env::args_os()));
}
