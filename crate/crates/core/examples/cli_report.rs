//! Drive the command-line pipeline in-process and print its report.

use clap::Parser;
use smoothlab::cli::{run, RunConfig};

fn main() {
    let argv: Vec<String> = ["smoothlab", "norms", "--model", "diag-exp:beta=0.5,dim=6", "--grades", "0..2"]
        .map(String::from)
        .to_vec();
    let config = RunConfig::parse_from(&argv);
    let outcome = run(&config, &argv);
    print!("{}", outcome.output);
    std::process::exit(outcome.status);
}
