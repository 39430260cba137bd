fn main() {
    std::process::exit(ppnmm::cli::main_with_args(std::env::args_os()));
}
