fn main() {
    std::process::exit(fedgraph::cli::main_with_args(std::env::args_os()));
}
