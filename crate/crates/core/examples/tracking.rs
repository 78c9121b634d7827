//! Full propagation on one scenario: prompts, bank contents and per-frame
//! scores. Pass an output directory to also write the run artifacts.
//!
//! `cargo run --release --example tracking [scenario] [oracle|matcher] [out-dir]`

use std::path::Path;

use maskprop::io::write_run_output;
use maskprop::pipeline::{run_scenario, RunConfig};
use maskprop::simulator::scenario_by_name;

fn main() -> maskprop::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "occlusion-distractor".into());
    let cfg = RunConfig {
        segmenter: args.next().unwrap_or_else(|| "matcher".into()),
        ..RunConfig::default()
    };
    let out = run_scenario(&scenario_by_name(&name)?, &cfg)?;
    let report = out.report.as_ref().expect("scenarios carry ground truth");

    println!("{:>5} {:>6} {:>6} {:>6} {:>6} {:>7}  prompts / bank", "frame", "j", "f", "s_iou", "s_occ", "area");
    for m in &report.per_frame {
        let t = m.frame_index;
        let o = &out.outputs[t];
        let p = &out.prompts[t];
        let bank: Vec<usize> = out.banks[t].entries.iter().map(|e| e.frame_index).collect();
        println!(
            "{t:>5} {:>6.3} {:>6.3} {:>6.2} {:>6.2} {:>7}  {} pts{} / {:?}{}",
            m.j,
            m.f,
            o.scores.s_iou,
            o.scores.s_occ,
            o.mask.area(),
            p.positive_points.len(),
            if p.box_prompt.is_some() { " + box" } else { "" },
            bank,
            if m.occluded { "  (occluded)" } else { "" }
        );
    }
    println!("mean J {:.4}  mean F {:.4}  J&F {:.4}", report.mean_j, report.mean_f, report.j_and_f);
    if let Some(dir) = args.next() {
        write_run_output(Path::new(&dir), &cfg, &out)?;
        println!("run written to {dir}");
    }
    Ok(())
}
