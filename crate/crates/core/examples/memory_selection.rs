//! Two-tier memory selection on a hand-made score history, followed by the
//! pixel filter applied to a stored probability map.
//!
//! `cargo run --example memory_selection`

use maskprop::mask::{BBox, Mask, ProbMap};
use maskprop::memory::{spatial_select, temporal_select, Candidate, FrameScores, SelectionConfig};

fn main() -> maskprop::Result<()> {
    // frames 1..=12: steady tracking, a collapse at 6..=8 while the object
    // is hidden, and a shaky recovery
    let scores = [
        (0.92, 0.45),
        (0.90, 0.40),
        (0.88, 0.42),
        (0.81, 0.30),
        (0.74, 0.12),
        (0.12, -0.50),
        (0.10, -0.45),
        (0.20, -0.30),
        (0.65, -0.05),
        (0.68, 0.02),
        (0.78, 0.25),
        (0.86, 0.38),
    ];
    let candidates = scores
        .iter()
        .enumerate()
        .map(|(i, &(s_iou, s_occ))| {
            Ok(Candidate {
                frame_index: i + 1,
                scores: FrameScores::new(s_iou, s_occ)?,
            })
        })
        .collect::<maskprop::Result<Vec<_>>>()?;
    let cfg = SelectionConfig::default();
    // one slot is reserved for the first frame
    let slots = cfg.capacity - 1;
    let sel = temporal_select(&candidates, &cfg, slots);
    println!("tau_iou {} tau_occ {} tau_rank {}, {slots} slots", cfg.tau_iou, cfg.tau_occ, cfg.tau_rank);
    println!("tier 1 (newest first): {:?}", sel.tier1);
    println!("tier 2 (ranked):       {:?}", sel.tier2);
    for r in &sel.rejected {
        println!("rejected frame {:>2}: {:?}", r.frame, r.reason);
    }

    let object = Mask::rect(12, 8, BBox::new(3, 2, 8, 5))?;
    let ring = Mask::rect(12, 8, BBox::new(2, 1, 9, 6))?;
    let values = ring
        .cells()
        .iter()
        .zip(object.cells())
        .map(|(&r, &o)| if o { 0.95 } else if r { 0.25 } else { 0.0 })
        .collect();
    let prob = ProbMap::from_values(12, 8, values)?;
    let (_, kept) = spatial_select(&prob, cfg.tau_pix);
    println!(
        "pixel filter at {}: {} of {} nonzero pixels kept",
        cfg.tau_pix,
        kept.area(),
        prob.values().iter().filter(|&&p| p > 0.0).count()
    );
    Ok(())
}
