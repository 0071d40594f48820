fn main() {
    std::process::exit(rdmsdp::cli::run());
}
