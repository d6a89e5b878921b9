fn main() {
    std::process::exit(linksim_cli::run(std::env::args_os()));
}
