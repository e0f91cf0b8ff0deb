fn main() {
    std::process::exit(sirsilv_cli::run(std::env::args_os()));
}
