fn main() {
    std::process::exit(pgpr::app::main_with_args(std::env::args_os()));
}
