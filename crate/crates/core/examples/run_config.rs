//! Running JSON configs through the batch front end, as the `matsos run`
//! binary does.
//!
//! cargo run --release --example run_config [-- path/to/config.json]

use matsos::cli::{run, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs");
    let paths: Vec<String> = match std::env::args().nth(1) {
        Some(p) => vec![p],
        None => vec![format!("{dir}/q_lambda.json"), format!("{dir}/grushin_decompose.json")],
    };
    for p in paths {
        let config = RunConfig::from_json(&std::fs::read_to_string(&p)?)?;
        let rep = run(&config);
        println!("{p}: verdict {:?}, exit {}", rep.verdict, rep.exit_code);
        for c in &rep.checks {
            println!("  {:<30} {:?}", c.condition.id(), c.verdict);
        }
        if let Some(d) = &rep.decomposition {
            println!("  reconstruction max error {:?}", d.reconstruction_max_error);
        }
    }
    Ok(())
}
