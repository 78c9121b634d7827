//! Render a built-in scenario to disk: frames, ground-truth masks and a
//! JSON manifest that can be edited and loaded back.
//!
//! `cargo run --example simulate [scenario] [out-dir]`

use std::path::PathBuf;

use maskprop::io::write_sequence;
use maskprop::simulator::{generate_scenario, scenario_by_name, SUITE};

fn main() -> maskprop::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "reappear-far".into());
    let out: PathBuf = args.next().map_or_else(|| std::env::temp_dir().join(&name), PathBuf::from);
    let scenario = scenario_by_name(&name)?;
    let seq = generate_scenario(&scenario)?;
    write_sequence(&out, &scenario, &seq)?;
    let hidden = seq.ground_truth.iter().filter(|g| g.occluded).count();
    println!(
        "{}: {} frames of {}x{}, {hidden} occluded, written to {}",
        scenario.name,
        seq.len(),
        scenario.width,
        scenario.height,
        out.display()
    );
    println!("built-in scenarios: {}", SUITE.join(", "));
    Ok(())
}
