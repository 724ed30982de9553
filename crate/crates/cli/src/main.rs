fn main() {
    std::process::exit(twistspec_cli::run(std::env::args_os()));
}
