fn main() {
    std::process::exit(manet_overhead_cli::main_with(std::env::args_os()));
}
