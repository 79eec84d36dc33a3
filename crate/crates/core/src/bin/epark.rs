fn main() {
    std::process::exit(energy_park_core::cli::run());
}
