fn main() {
    env_logger::init();
    std::process::exit(transduce_cli::run(std::env::args_os()));
}
