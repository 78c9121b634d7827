//! Mean J&F of the matcher segmenter for each ablation row, per scenario.
//!
//! `cargo run --release --example ablation [scenario ...]`

use maskprop::pipeline::{run_scenario, RunConfig, Toggles};
use maskprop::simulator::{scenario_by_name, OCCLUSION_SUITE};

fn main() -> maskprop::error::Result<()> {
    let names: Vec<String> = std::env::args().skip(1).collect();
    let names: Vec<String> = if names.is_empty() {
        OCCLUSION_SUITE.iter().map(|s| s.to_string()).collect()
    } else {
        names
    };
    let rows = [
        Toggles::BASELINE,
        Toggles { sparse: true, ..Toggles::BASELINE },
        Toggles { dense: true, ..Toggles::BASELINE },
        Toggles { sparse: true, dense: true, ..Toggles::BASELINE },
        Toggles { temporal: true, spatial: true, ..Toggles::BASELINE },
        Toggles::FULL,
    ];
    print!("{:<14}", "toggles");
    for n in &names {
        print!("{n:>16}");
    }
    println!("{:>10}", "mean");
    for t in rows {
        let cfg = RunConfig {
            segmenter: "matcher".into(),
            ..RunConfig::default()
        }
        .with_toggles(t);
        print!("{:<14}", t.label());
        let mut total = 0.0;
        for n in &names {
            let r = run_scenario(&scenario_by_name(n)?, &cfg)?.report.expect("ground truth");
            total += r.j_and_f;
            print!("{:>16.4}", r.j_and_f);
        }
        println!("{:>10.4}", total / names.len() as f64);
    }
    Ok(())
}
