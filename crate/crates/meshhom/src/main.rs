fn main() {
    std::process::exit(meshhom::harness::cli_main(std::env::args_os()));
}
