fn main() {
    std::process::exit(coop2mac::harness::run_command(std::env::args()));
}
