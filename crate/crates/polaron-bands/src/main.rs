fn main() {
    std::process::exit(polaron_bands::run(std::env::args_os()));
}
