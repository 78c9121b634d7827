//! Keypoint motion: contour keypoints of each ground-truth mask, linear
//! extrapolation to the next frame, and the error against where the object
//! actually went. Occluded frames leave the history frozen, so the horizon
//! grows until the object returns.
//!
//! `cargo run --release --example sparse_motion [scenario] [keypoints]`

use maskprop::mask::centroid;
use maskprop::sparse::{extract_keypoints, extrapolate_keypoints, MotionHistory};
use maskprop::simulator::{generate_scenario, scenario_by_name};

fn main() -> maskprop::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "sinusoidal".into());
    let count: usize = args.next().map_or(Ok(5), |a| a.parse()).unwrap_or(5);
    let seq = generate_scenario(&scenario_by_name(&name)?)?;

    let mut history = MotionHistory::new(2);
    history.push(extract_keypoints(&seq.ground_truth[0].mask, count, 0)?)?;
    println!("{:>5} {:>7} {:>16} {:>16} {:>7}", "frame", "horizon", "predicted", "actual", "error");
    for t in 1..seq.len() {
        let gt = &seq.ground_truth[t];
        let latest = history.latest().map_or(0, |k| k.frame_index);
        if history.len() >= 2 && !gt.occluded {
            let predicted = extrapolate_keypoints(&history, t - latest)?.centroid();
            let actual = centroid(&gt.mask)?;
            println!(
                "{t:>5} {:>7} ({:>6.1},{:>6.1}) ({:>6.1},{:>6.1}) {:>7.2}",
                t - latest,
                predicted.x,
                predicted.y,
                actual.x,
                actual.y,
                predicted.distance(&actual)
            );
        } else if gt.occluded {
            println!("{t:>5} {:>7} {:>16}", t - latest, "occluded");
        }
        if !gt.occluded {
            history.push(extract_keypoints(&gt.mask, count, t)?)?;
        }
    }
    Ok(())
}
