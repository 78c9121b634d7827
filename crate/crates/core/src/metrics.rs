//! Region similarity (J), contour accuracy (F) and their aggregate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{boundary, dilate, iou, Mask};

/// `ceil(0.008 * diagonal)` pixels.
pub fn default_tolerance(width: usize, height: usize) -> f64 {
    (0.008 * ((width * width + height * height) as f64).sqrt()).ceil()
}

/// Intersection over union; two empty masks agree perfectly.
pub fn j_score(pred: &Mask, gt: &Mask) -> Result<f64> {
    iou(pred, gt)
}

/// Boundary F-measure: each boundary pixel counts as matched when the other
/// boundary lies within `tolerance` (Euclidean).
pub fn f_score(pred: &Mask, gt: &Mask, tolerance: f64) -> Result<f64> {
    pred.ensure_same_dims(gt.width(), gt.height())?;
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::OutOfRange {
            what: "boundary tolerance",
            value: tolerance,
        });
    }
    let bp = boundary(pred);
    let bg = boundary(gt);
    let (np, ng) = (bp.area(), bg.area());
    match (np, ng) {
        (0, 0) => return Ok(1.0),
        (0, _) | (_, 0) => return Ok(0.0),
        _ => {}
    }
    let near_gt = dilate(&bg, tolerance);
    let near_pred = dilate(&bp, tolerance);
    let hits = |b: &Mask, near: &Mask| b.pixels().filter(|&(x, y)| near.get(x, y)).count();
    let precision = hits(&bp, &near_gt) as f64 / np as f64;
    let recall = hits(&bg, &near_pred) as f64 / ng as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame_index: usize,
    pub j: f64,
    pub f: f64,
    /// The ground truth marks the object as hidden in this frame.
    #[serde(default)]
    pub occluded: bool,
}

/// Score one frame with the default tolerance for its size.
pub fn score_frame(frame_index: usize, pred: &Mask, gt: &Mask, occluded: bool) -> Result<FrameMetrics> {
    let tol = default_tolerance(gt.width(), gt.height());
    Ok(FrameMetrics {
        frame_index,
        j: j_score(pred, gt)?,
        f: f_score(pred, gt, tol)?,
        occluded,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_frame: Vec<FrameMetrics>,
    pub mean_j: f64,
    pub mean_f: f64,
    pub j_and_f: f64,
    pub frames_evaluated: usize,
}

#[derive(Serialize)]
struct Summary {
    mean_j: f64,
    mean_f: f64,
    j_and_f: f64,
    frames: usize,
}

impl MetricsReport {
    /// `frame_index,j,f` rows followed by a `mean` row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["frame_index", "j", "f"])?;
        for m in &self.per_frame {
            w.write_record([m.frame_index.to_string(), m.j.to_string(), m.f.to_string()])?;
        }
        w.write_record(["mean".to_string(), self.mean_j.to_string(), self.mean_f.to_string()])?;
        w.flush().map_err(|e| Error::io("metrics csv", e))?;
        Ok(())
    }

    /// `{mean_j, mean_f, j_and_f, frames}`.
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Summary {
            mean_j: self.mean_j,
            mean_f: self.mean_f,
            j_and_f: self.j_and_f,
            frames: self.frames_evaluated,
        })?)
    }
}

/// Average per-frame scores. Frames whose ground truth is occluded are kept
/// (scored by the empty-mask conventions) unless `include_occluded` is false.
pub fn aggregate(per_frame: &[FrameMetrics], include_occluded: bool) -> Result<MetricsReport> {
    let used: Vec<&FrameMetrics> = per_frame
        .iter()
        .filter(|m| include_occluded || !m.occluded)
        .collect();
    if used.is_empty() {
        return Err(Error::NoFrames);
    }
    let n = used.len() as f64;
    let frames_evaluated = used.len();
    let mean_j = used.iter().map(|m| m.j).sum::<f64>() / n;
    let mean_f = used.iter().map(|m| m.f).sum::<f64>() / n;
    Ok(MetricsReport {
        per_frame: used.into_iter().copied().collect(),
        mean_j,
        mean_f,
        j_and_f: (mean_j + mean_f) / 2.0,
        frames_evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::BBox;

    fn sq(x: usize, y: usize, side: usize) -> Mask {
        Mask::rect(32, 32, BBox::new(x, y, x + side - 1, y + side - 1)).unwrap()
    }

    #[test]
    fn j_examples() {
        let a = sq(4, 4, 8);
        let empty = Mask::new(32, 32).unwrap();
        assert_eq!(j_score(&a, &a).unwrap(), 1.0);
        assert_eq!(j_score(&empty, &a).unwrap(), 0.0);
        assert_eq!(j_score(&empty, &empty).unwrap(), 1.0);
        let b = Mask::rect(32, 32, BBox::new(8, 4, 15, 11)).unwrap();
        assert!((j_score(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn f_examples() {
        let a = sq(4, 4, 8);
        let empty = Mask::new(32, 32).unwrap();
        assert_eq!(f_score(&a, &a, 1.0).unwrap(), 1.0);
        assert_eq!(f_score(&a, &sq(20, 20, 8), 2.0).unwrap(), 0.0);
        assert_eq!(f_score(&empty, &empty, 1.0).unwrap(), 1.0);
        assert_eq!(f_score(&empty, &a, 1.0).unwrap(), 0.0);
        assert_eq!(f_score(&a, &a.translate(1, 0), 1.0).unwrap(), 1.0);
        assert!(f_score(&a, &a.translate(3, 0), 1.0).unwrap() < 1.0);
        assert!(f_score(&a, &sq(0, 0, 4), -1.0).is_err());
    }

    #[test]
    fn tolerance_default() {
        assert_eq!(default_tolerance(128, 96), 2.0);
        assert_eq!(default_tolerance(854, 480), 8.0);
    }

    #[test]
    fn aggregate_examples() {
        let fm = |i, j, f, occluded| FrameMetrics {
            frame_index: i,
            j,
            f,
            occluded,
        };
        let r = aggregate(&[fm(1, 1.0, 1.0, false), fm(2, 0.0, 0.5, false)], true).unwrap();
        assert_eq!(r.mean_j, 0.5);
        assert_eq!(r.j_and_f, (r.mean_j + r.mean_f) / 2.0);
        let r = aggregate(&[fm(1, 1.0, 1.0, false), fm(2, 0.0, 0.0, true)], false).unwrap();
        assert_eq!((r.mean_j, r.per_frame.len()), (1.0, 1));
        assert!(aggregate(&[], true).is_err());
        assert!(aggregate(&[fm(1, 1.0, 1.0, true)], false).is_err());
    }

    #[test]
    fn csv_and_json() {
        let r = aggregate(
            &[FrameMetrics {
                frame_index: 3,
                j: 0.5,
                f: 0.25,
                occluded: false,
            }],
            true,
        )
        .unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "frame_index,j,f\n3,0.5,0.25\nmean,0.5,0.25\n");
        let v: serde_json::Value = serde_json::from_str(&r.summary_json().unwrap()).unwrap();
        assert_eq!(v["j_and_f"], 0.375);
        assert_eq!(v["frames"], 1);
    }
}
