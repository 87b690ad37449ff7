//! Driving the experiment harness from code: a small error table written as
//! CSV with its JSON report.
//!
//! ```bash
//! cargo run --release --example run_experiment
//! ```

use elastic_fds::harness::{run, Experiment, ExperimentConfig};

fn main() -> elastic_fds::Result<()> {
    let mut config = ExperimentConfig::new(Experiment::ErrorTable);
    config.sizes = vec![400, 800];
    config.epsilons = vec![1e-6, 1e-8, 1e-10];
    let outcome = run(&config)?;
    print!("{}", outcome.table.to_csv_string());

    let path = std::env::temp_dir().join("elastic_fds_error_table.csv");
    let (csv, json) = outcome.write(&path)?;
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}
