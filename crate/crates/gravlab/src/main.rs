use gravlab::cli::main_from_args;

fn main() {
    std::process::exit(main_from_args(std::env::args_os()));
}
