fn main() {
    std::process::exit(dvdw_cli::run_cli(std::env::args_os()));
}
