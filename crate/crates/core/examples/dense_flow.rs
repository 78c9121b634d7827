//! Dense motion on a simulated scenario: flow between consecutive frames,
//! masked by the true object, warped one frame forward and compared with
//! the next ground-truth mask.
//!
//! `cargo run --release --example dense_flow [scenario] [flow-dump-dir]`

use std::path::Path;

use maskprop::flow::{estimate_flow, flow_box_prompt, masked_flow, warp_mask_forward};
use maskprop::io::write_flow;
use maskprop::mask::iou;
use maskprop::simulator::{generate_scenario, scenario_by_name};

fn main() -> maskprop::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "linear".into());
    let dump = args.next();
    let scenario = scenario_by_name(&name)?;
    let seq = generate_scenario(&scenario)?;

    println!("{:>5} {:>8} {:>8} {:>8} {:>8} {:>7}  box", "frame", "u", "v", "true u", "true v", "iou");
    for t in 1..seq.len() {
        let (before, after) = (&seq.ground_truth[t - 1], &seq.ground_truth[t]);
        if before.occluded || after.occluded {
            continue;
        }
        let flow = estimate_flow(&seq.frames[t - 1], &seq.frames[t])?;
        let (masked, (u, v)) = masked_flow(&flow, &before.mask)?;
        let warped = warp_mask_forward(&before.mask, &masked, 1)?;
        let p0 = scenario.trajectory.position(t - 1);
        let p1 = scenario.trajectory.position(t);
        // the object is painted at its rounded center
        let (tu, tv) = (p1.x.round() - p0.x.round(), p1.y.round() - p0.y.round());
        let b = flow_box_prompt(&warped)?;
        println!(
            "{t:>5} {u:>8.3} {v:>8.3} {tu:>8.0} {tv:>8.0} {:>7.3}  ({},{})-({},{})",
            iou(&warped, &after.mask)?,
            b.x_min,
            b.y_min,
            b.x_max,
            b.y_max
        );
        if t == 1 {
            if let Some(dir) = &dump {
                write_flow(Path::new(dir), &flow)?;
                println!("flow for frames 0 -> 1 written to {dir}");
            }
        }
    }
    Ok(())
}
