//! Suite-averaged J&F for each value of one hyperparameter, as CSV.
//!
//! `cargo run --release --example sweep [param] [v1,v2,...] [oracle|matcher]`

use maskprop::pipeline::{sweep, write_sweep_csv, RunConfig};
use maskprop::simulator::scenario_suite;

fn main() -> maskprop::Result<()> {
    let mut args = std::env::args().skip(1);
    let param = args.next().unwrap_or_else(|| "keypoints".into());
    let values: Vec<f64> = args
        .next()
        .unwrap_or_else(|| "1,3,5,7,9".into())
        .split(',')
        .map(|v| v.trim().parse().expect("numeric sweep value"))
        .collect();
    let cfg = RunConfig {
        segmenter: args.next().unwrap_or_else(|| "matcher".into()),
        ..RunConfig::default()
    };
    let rows = sweep(&cfg, &param, &values, &scenario_suite())?;
    write_sweep_csv(std::io::stdout().lock(), &param, &rows)
}
