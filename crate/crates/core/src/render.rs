//! Boundary overlays for visual inspection.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::io::{list_pgm, read_frame_pgm, read_mask_pgm, MASKS_DIR};
use crate::mask::{boundary, Mask};

pub const PRED_COLOR: Rgb<u8> = Rgb([255, 0, 0]);
pub const GT_COLOR: Rgb<u8> = Rgb([0, 255, 0]);
/// Pixels on both boundaries.
pub const SHARED_COLOR: Rgb<u8> = Rgb([255, 255, 0]);

/// Gray frame with the predicted boundary in red, the ground-truth boundary
/// in green and pixels on both in yellow.
pub fn overlay(frame: &Frame, pred: Option<&Mask>, gt: Option<&Mask>) -> Result<RgbImage> {
    let (w, h) = frame.dims();
    let edge = |m: Option<&Mask>| -> Result<Option<Mask>> {
        m.map(|m| {
            m.ensure_same_dims(w, h)?;
            Ok(boundary(m))
        })
        .transpose()
    };
    let pb = edge(pred)?;
    let gb = edge(gt)?;
    let on = |b: &Option<Mask>, x: usize, y: usize| b.as_ref().is_some_and(|b| b.get(x, y));
    Ok(RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        match (on(&pb, x, y), on(&gb, x, y)) {
            (true, true) => SHARED_COLOR,
            (true, false) => PRED_COLOR,
            (false, true) => GT_COLOR,
            _ => {
                let v = (frame.get(x, y) * 255.0).round() as u8;
                Rgb([v, v, v])
            }
        }
    }))
}

/// Write `%05d.png` overlays for every frame of a run. `run_dir` must hold
/// the `masks/` directory written by a run; `gt_dir` is optional.
pub fn render_overlays(run_dir: &Path, frames_dir: &Path, gt_dir: Option<&Path>, out_dir: &Path) -> Result<usize> {
    let frames = list_pgm(frames_dir)?;
    let preds = list_pgm(&run_dir.join(MASKS_DIR))?;
    if frames.len() != preds.len() {
        return Err(Error::CountMismatch(frames.len(), preds.len()));
    }
    let gts = match gt_dir {
        Some(d) => {
            let g = list_pgm(d)?;
            if g.len() != frames.len() {
                return Err(Error::CountMismatch(frames.len(), g.len()));
            }
            Some(g)
        }
        None => None,
    };
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (i, (fp, pp)) in frames.iter().zip(&preds).enumerate() {
        let frame = read_frame_pgm(fp)?;
        let pred = read_mask_pgm(pp)?;
        let gt = gts.as_ref().map(|g| read_mask_pgm(&g[i])).transpose()?;
        let img = overlay(&frame, Some(&pred), gt.as_ref())?;
        let path = out_dir.join(format!("{i:05}.png"));
        img.save(&path).map_err(|source| Error::Image { path, source })?;
    }
    Ok(frames.len())
}
