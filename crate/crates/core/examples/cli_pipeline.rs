//! Runs the command-line pipeline in-process: generate, extract, build
//! graphs, train and inspect, all driven by one config with overrides.
//!
//! `cargo run --release --example cli_pipeline -- [out_dir]`

use fedgraph::cli::main_with_args;

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "pipeline".into());
    let out = format!("paths.output_dir={dir}");
    let graphs = format!("{dir}/graphs.gds");
    for cmd in [
        vec!["gen-synthetic"],
        vec!["extract"],
        vec!["build-graphs"],
        vec!["train", "--mode", "federated"],
        vec!["evaluate"],
        vec!["inspect", graphs.as_str()],
    ] {
        let args = [&["fedgraph", "--seed", "1", "--set", out.as_str()][..], &cmd[..]].concat();
        let code = main_with_args(args);
        if code != 0 {
            std::process::exit(code);
        }
    }
}
