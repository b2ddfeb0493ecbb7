fn main() {
    std::process::exit(influence_rl::harness::cli_main(std::env::args_os()));
}
