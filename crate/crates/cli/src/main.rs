fn main() {
    std::process::exit(drpkit::run(std::env::args_os()));
}
