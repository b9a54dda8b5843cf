fn main() {
    std::process::exit(cladoflow::main_with_args(std::env::args_os()));
}
