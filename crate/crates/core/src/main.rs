fn main() {
    std::process::exit(bandit_misspec::cli::run(std::env::args_os()));
}
