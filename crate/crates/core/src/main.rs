fn main() {
    std::process::exit(branchkit::cli::run(std::env::args_os()));
}
