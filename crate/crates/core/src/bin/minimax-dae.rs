fn main() {
    std::process::exit(minimax_dae::cli::main());
}
