//! Region and boundary scores for a prediction sliding off a disc, at a few
//! boundary tolerances.
//!
//! `cargo run --example evaluate`

use maskprop::mask::Mask;
use maskprop::metrics::{default_tolerance, f_score, j_score};

fn main() -> maskprop::Result<()> {
    let (w, h) = (128, 96);
    let disc = |cx: f64, cy: f64| {
        Mask::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            dx * dx + dy * dy <= 15.0 * 15.0
        })
    };
    let gt = disc(64.0, 48.0)?;
    let default = default_tolerance(w, h);
    println!("default boundary tolerance for {w}x{h}: {default} px");
    println!("{:>6} {:>7} {:>7} {:>7} {:>7}", "shift", "J", "F@0", "F@1", format!("F@{default}"));
    for shift in [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let pred = disc(64.0 + shift, 48.0)?;
        println!(
            "{shift:>6} {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
            j_score(&pred, &gt)?,
            f_score(&pred, &gt, 0.0)?,
            f_score(&pred, &gt, 1.0)?,
            f_score(&pred, &gt, default)?
        );
    }
    let empty = Mask::new(w, h)?;
    println!("empty vs empty: J {} F {}", j_score(&empty, &empty)?, f_score(&empty, &empty, default)?);
    Ok(())
}
