//! The segmenter interface driven by the pipeline, plus two reference
//! implementations: a prompt-sensitive ground-truth oracle and a template
//! matcher that segments purely from the memory bank.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::mask::{bounding_box, dilate, erode, iou, BBox, Mask, Point, ProbMap};
use crate::memory::{FrameScores, MemoryBank, MemoryEntry};
use crate::simulator::GroundTruthRecord;

/// Decision boundary between foreground and background probabilities.
pub const MASK_THRESHOLD: f32 = 0.5;

/// Everything a segmenter is told about where the object is.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PromptSet {
    pub positive_points: Vec<Point>,
    pub box_prompt: Option<BBox>,
    /// Only set on the first frame.
    pub first_frame_mask: Option<Mask>,
}

impl PromptSet {
    pub fn is_empty(&self) -> bool {
        self.positive_points.is_empty() && self.box_prompt.is_none() && self.first_frame_mask.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmenterOutput {
    pub prob: ProbMap,
    /// `prob > 0.5`.
    pub mask: Mask,
    pub scores: FrameScores,
}

impl SegmenterOutput {
    pub fn new(prob: ProbMap, scores: FrameScores) -> Self {
        let mask = prob.threshold(MASK_THRESHOLD);
        SegmenterOutput { prob, mask, scores }
    }

    /// Output for a frame where the object is declared absent.
    pub fn absent(width: usize, height: usize, scores: FrameScores) -> Result<Self> {
        Ok(SegmenterOutput::new(ProbMap::zeros(width, height)?, scores))
    }
}

pub trait Segmenter: Send {
    fn name(&self) -> &'static str;

    /// Segment frame `frame_index` given this frame's prompts and the current
    /// memory bank.
    fn segment(
        &mut self,
        frame_index: usize,
        frame: &Frame,
        prompts: &PromptSet,
        bank: &MemoryBank,
    ) -> Result<SegmenterOutput>;
}

fn check_dims(frame: &Frame, bank: &MemoryBank) -> Result<()> {
    let first = bank.first()?;
    frame.ensure_same_dims(first.mask.width(), first.mask.height())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Width in pixels of the band around the true boundary that gets
    /// randomly flipped.
    pub boundary_noise: f64,
    /// Fraction of band pixels flipped.
    pub boundary_flip_rate: f64,
    /// Minimum box-prompt IoU against the true bounding box that counts as a
    /// hit.
    pub reacquire_box_iou: f64,
    /// `s_iou` is reduced by a uniform draw from `[0, score_noise]`.
    pub score_noise: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            boundary_noise: 1.0,
            boundary_flip_rate: 0.1,
            reacquire_box_iou: 0.3,
            score_noise: 0.05,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &'static str, value: f64| Err(Error::OutOfRange { what, value });
        if self.boundary_noise.is_nan() || self.boundary_noise < 0.0 {
            return bad("oracle boundary_noise", self.boundary_noise);
        }
        if !(0.0..=1.0).contains(&self.boundary_flip_rate) {
            return bad("oracle boundary_flip_rate", self.boundary_flip_rate);
        }
        if !(0.0..=1.0).contains(&self.reacquire_box_iou) {
            return bad("oracle reacquire_box_iou", self.reacquire_box_iou);
        }
        if self.score_noise.is_nan() || self.score_noise < 0.0 {
            return bad("oracle score_noise", self.score_noise);
        }
        Ok(())
    }
}

/// True when any prompt lands on the object: a point inside the mask, or a
/// box overlapping its bounding box by at least `min_box_iou`.
pub fn prompt_hits(prompts: &PromptSet, gt: &Mask, min_box_iou: f64) -> bool {
    let point_hit = prompts.positive_points.iter().any(|p| {
        p.to_pixel(gt.width(), gt.height())
            .is_some_and(|(x, y)| gt.get(x, y))
    });
    let box_hit = match (prompts.box_prompt, bounding_box(gt)) {
        (Some(b), Ok(g)) => b.iou(&g) >= min_box_iou,
        _ => false,
    };
    point_hit || box_hit
}

fn frame_rng(seed: u64, frame_index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (frame_index as u64).wrapping_mul(0xD134_2543_DE82_EF95))
}

/// One oracle step. Returns the output and whether the object counts as
/// tracked afterwards.
///
/// * occluded: empty, `s_iou = 0.1`, `s_occ = -0.5`, tracking lost;
/// * visible and (tracked or hit by a prompt): the true mask with a noisy
///   boundary, `s_occ = 0.5`;
/// * visible but lost and not prompted onto it: empty, `s_iou = 0.1`,
///   `s_occ = -0.3`.
pub fn oracle_segment(
    frame: &Frame,
    prompts: &PromptSet,
    gt: &GroundTruthRecord,
    cfg: &OracleConfig,
    tracked: bool,
) -> Result<(SegmenterOutput, bool)> {
    let (w, h) = frame.dims();
    gt.mask.ensure_same_dims(w, h)?;
    if gt.occluded || gt.mask.is_empty() {
        return Ok((SegmenterOutput::absent(w, h, FrameScores::new(0.1, -0.5)?)?, false));
    }
    if !tracked && !prompt_hits(prompts, &gt.mask, cfg.reacquire_box_iou) {
        return Ok((SegmenterOutput::absent(w, h, FrameScores::new(0.1, -0.3)?)?, false));
    }

    let mut rng = frame_rng(cfg.seed, gt.frame_index);
    let band_outer = dilate(&gt.mask, cfg.boundary_noise);
    let band_inner = erode(&gt.mask, cfg.boundary_noise);
    let mut noisy = gt.mask.clone();
    for y in 0..h {
        for x in 0..w {
            if band_outer.get(x, y) && !band_inner.get(x, y) && rng.gen_bool(cfg.boundary_flip_rate) {
                noisy.set(x, y, !gt.mask.get(x, y));
            }
        }
    }
    if noisy.is_empty() {
        noisy = gt.mask.clone();
    }
    let ring = dilate(&noisy, 1.0);
    let values = noisy
        .cells()
        .iter()
        .zip(ring.cells())
        .map(|(&inside, &near)| match (inside, near) {
            (true, _) => 0.95,
            (false, true) => 0.25,
            _ => 0.0,
        })
        .collect();
    let prob = ProbMap::from_values(w, h, values)?;
    let s_iou = (iou(&noisy, &gt.mask)? - rng.gen_range(0.0..=cfg.score_noise)).clamp(0.0, 1.0);
    Ok((SegmenterOutput::new(prob, FrameScores::new(s_iou, 0.5)?), true))
}

/// Ground-truth oracle whose success depends on whether it is still locked
/// on, or has been prompted back onto, the object. Frame 0 counts as tracked.
#[derive(Clone, Debug)]
pub struct Oracle {
    ground_truth: Vec<GroundTruthRecord>,
    cfg: OracleConfig,
    tracked: bool,
}

impl Oracle {
    pub fn new(ground_truth: Vec<GroundTruthRecord>, cfg: OracleConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Oracle {
            ground_truth,
            cfg,
            tracked: true,
        })
    }

    pub fn is_tracking(&self) -> bool {
        self.tracked
    }
}

impl Segmenter for Oracle {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn segment(
        &mut self,
        frame_index: usize,
        frame: &Frame,
        prompts: &PromptSet,
        bank: &MemoryBank,
    ) -> Result<SegmenterOutput> {
        check_dims(frame, bank)?;
        let gt = self
            .ground_truth
            .get(frame_index)
            .ok_or(Error::MissingGroundTruth(frame_index))?;
        let (out, tracked) = oracle_segment(frame, prompts, gt, &self.cfg, self.tracked)?;
        self.tracked = tracked;
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    /// Half-width of the square search window around the entry's own
    /// position, or around the point prompts.
    pub search_radius: usize,
    /// Half-width of the search window around a box prompt's center.
    pub box_search_radius: usize,
    /// The object is declared absent when the best correlation falls below
    /// this.
    pub presence_threshold: f64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            search_radius: 16,
            box_search_radius: 4,
            presence_threshold: 0.5,
        }
    }
}

/// Appearance template of one memory entry.
struct Template {
    bbox: BBox,
    values: Vec<f64>,
    norm: f64,
}

impl Template {
    fn from_entry(e: &MemoryEntry) -> Option<Template> {
        let bbox = bounding_box(&e.mask).ok()?;
        let mut values = Vec::with_capacity(bbox.area());
        for y in bbox.y_min..=bbox.y_max {
            for x in bbox.x_min..=bbox.x_max {
                values.push(e.appearance.get(x, y) as f64);
            }
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Some(Template { bbox, values, norm })
    }

    /// Zero-mean normalized cross-correlation with the frame region whose
    /// top-left corner is `(x0, y0)`. Flat regions correlate to 0.
    fn ncc(&self, frame: &Frame, x0: usize, y0: usize) -> f64 {
        let (bw, bh) = (self.bbox.width(), self.bbox.height());
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut dot = 0.0;
        let mut i = 0;
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                let v = frame.get(x, y) as f64;
                sum += v;
                sum_sq += v * v;
                dot += v * self.values[i];
                i += 1;
            }
        }
        let n = (bw * bh) as f64;
        let var = sum_sq - sum * sum / n;
        if self.norm < 1e-9 || var < 1e-12 {
            return 0.0;
        }
        // the template is zero-mean, so the frame mean drops out of `dot`
        dot / (self.norm * var.sqrt())
    }
}

/// Best displacement of one template: search the square window of the given
/// half-width around `anchor`, scanning rows top to bottom and columns left
/// to right; the first maximum wins.
fn best_shift(t: &Template, frame: &Frame, anchor: Point, radius: usize) -> Option<((i64, i64), f64)> {
    let (w, h) = (frame.width() as i64, frame.height() as i64);
    let c = t.bbox.center();
    let r = radius as f64;
    let range = |a: f64, c: f64, lo: i64, hi: i64| -> (i64, i64) {
        (((a - c - r).ceil() as i64).max(lo), ((a - c + r).floor() as i64).min(hi))
    };
    let (bx0, by0) = (t.bbox.x_min as i64, t.bbox.y_min as i64);
    let (bx1, by1) = (t.bbox.x_max as i64, t.bbox.y_max as i64);
    let (dx_lo, dx_hi) = range(anchor.x, c.x, -bx0, w - 1 - bx1);
    let (dy_lo, dy_hi) = range(anchor.y, c.y, -by0, h - 1 - by1);
    let mut best: Option<((i64, i64), f64)> = None;
    for dy in dy_lo..=dy_hi {
        for dx in dx_lo..=dx_hi {
            let score = t.ncc(frame, (bx0 + dx) as usize, (by0 + dy) as usize);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some(((dx, dy), score));
            }
        }
    }
    best
}

/// Segmenter that tracks by template matching every memory entry into the
/// current frame and letting the translated masks vote.
///
/// The search for each entry is centered on the box prompt when there is
/// one (with the tighter `box_search_radius`), else on the centroid of the
/// point prompts, else on the entry's own position.
#[derive(Clone, Debug, Default)]
pub struct Matcher {
    pub cfg: MatcherConfig,
}

impl Matcher {
    pub fn new(cfg: MatcherConfig) -> Self {
        Matcher { cfg }
    }

    fn anchor(&self, prompts: &PromptSet) -> Option<(Point, usize)> {
        if let Some(b) = prompts.box_prompt {
            return Some((b.center(), self.cfg.box_search_radius));
        }
        if prompts.positive_points.is_empty() {
            return None;
        }
        let n = prompts.positive_points.len() as f64;
        let (sx, sy) = prompts
            .positive_points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Some((Point::new(sx / n, sy / n), self.cfg.search_radius))
    }

    pub fn segment_with_bank(&self, frame: &Frame, prompts: &PromptSet, bank: &MemoryBank) -> Result<SegmenterOutput> {
        if bank.is_empty() {
            return Err(Error::EmptyBank);
        }
        check_dims(frame, bank)?;
        let (w, h) = frame.dims();
        let anchor = self.anchor(prompts);

        let mut votes = vec![0u32; w * h];
        let mut placed: Vec<Mask> = Vec::new();
        let mut best_ncc = f64::NEG_INFINITY;
        for entry in bank.entries() {
            let Some(t) = Template::from_entry(entry) else {
                continue;
            };
            let (center, radius) = anchor.unwrap_or((t.bbox.center(), self.cfg.search_radius));
            let Some(((dx, dy), score)) = best_shift(&t, frame, center, radius) else {
                continue;
            };
            best_ncc = best_ncc.max(score);
            let moved = entry.mask.translate(dx, dy);
            for (x, y) in moved.pixels() {
                votes[y * w + x] += 1;
            }
            placed.push(moved);
        }

        if placed.is_empty() || best_ncc < self.cfg.presence_threshold {
            let s_occ = if placed.is_empty() {
                -self.cfg.presence_threshold
            } else {
                best_ncc - self.cfg.presence_threshold
            };
            return SegmenterOutput::absent(w, h, FrameScores::new(0.0, s_occ)?);
        }

        let n = bank.len() as f32;
        let prob = ProbMap::from_values(w, h, votes.iter().map(|&v| v as f32 / n).collect())?;
        let s_iou = mean_pairwise_iou(&placed)?;
        let s_occ = best_ncc - self.cfg.presence_threshold;
        Ok(SegmenterOutput::new(prob, FrameScores::new(s_iou, s_occ)?))
    }
}

fn mean_pairwise_iou(masks: &[Mask]) -> Result<f64> {
    if masks.len() < 2 {
        return Ok(1.0);
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            total += iou(&masks[i], &masks[j])?;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

impl Segmenter for Matcher {
    fn name(&self) -> &'static str {
        "matcher"
    }

    fn segment(
        &mut self,
        _frame_index: usize,
        frame: &Frame,
        prompts: &PromptSet,
        bank: &MemoryBank,
    ) -> Result<SegmenterOutput> {
        self.segment_with_bank(frame, prompts, bank)
    }
}

/// Names accepted by [`build_segmenter`].
pub const SEGMENTERS: [&str; 2] = ["oracle", "matcher"];

/// Build a segmenter by name. The oracle needs the sequence's ground truth.
pub fn build_segmenter(
    name: &str,
    ground_truth: Option<&[GroundTruthRecord]>,
    oracle: &OracleConfig,
    matcher: &MatcherConfig,
) -> Result<Box<dyn Segmenter>> {
    match name {
        "oracle" => {
            let gt = ground_truth.ok_or(Error::MissingGroundTruth(0))?;
            Ok(Box::new(Oracle::new(gt.to_vec(), oracle.clone())?))
        }
        "matcher" => Ok(Box::new(Matcher::new(matcher.clone()))),
        other => Err(Error::UnknownSegmenter(other.to_string())),
    }
}
