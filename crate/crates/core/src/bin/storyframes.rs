fn main() {
    std::process::exit(storyframes::cli::main_with_args());
}
