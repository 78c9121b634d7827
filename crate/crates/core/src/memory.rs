//! Memory bank and its selection policies.
//!
//! The bank always keeps the first prompted frame. The remaining slots are
//! either the most recent frames (`fifo`) or chosen by confidence:
//!
//! * tier 1: candidates that are present (`s_occ > tau_occ`) and confident
//!   (`s_iou > tau_iou`), newest first;
//! * tier 2: everything else with `s_iou > tau_rank`, ranked by
//!   `s_iou + s_occ` (newer wins ties), filling whatever is left.
//!
//! Selected frames can additionally have their probability maps thresholded
//! per pixel before they are stored. Every threshold is a strict inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::mask::{Mask, ProbMap};

pub const DEFAULT_CAPACITY: usize = 7;

/// Segmenter self-assessment for one frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameScores {
    /// Predicted mask quality in `[0, 1]`.
    pub s_iou: f64,
    /// Presence confidence; `>= 0` means the object is present.
    pub s_occ: f64,
}

impl FrameScores {
    pub fn new(s_iou: f64, s_occ: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s_iou) {
            return Err(Error::OutOfRange {
                what: "s_iou",
                value: s_iou,
            });
        }
        if !s_occ.is_finite() {
            return Err(Error::OutOfRange {
                what: "s_occ",
                value: s_occ,
            });
        }
        Ok(FrameScores { s_iou, s_occ })
    }

    pub fn total(&self) -> f64 {
        self.s_iou + self.s_occ
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub capacity: usize,
    pub tau_iou: f64,
    pub tau_occ: f64,
    pub tau_rank: f64,
    pub tau_pix: f32,
    pub sample_interval: usize,
    /// Candidate range in frames; `None` means `2 * capacity * sample_interval`.
    pub window: Option<usize>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            capacity: DEFAULT_CAPACITY,
            tau_iou: 0.7,
            tau_occ: 0.0,
            tau_rank: 0.6,
            tau_pix: 0.5,
            sample_interval: 1,
            window: None,
        }
    }
}

impl SelectionConfig {
    pub fn window(&self) -> usize {
        self.window
            .unwrap_or(2 * self.capacity * self.sample_interval)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.tau_iou, self.tau_occ, self.tau_rank, self.tau_pix as f64];
        if finite.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("selection thresholds must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.tau_pix) {
            return Err(Error::InvalidConfig("tau_pix must lie in [0, 1]".into()));
        }
        if self.capacity == 0 {
            return Err(Error::InvalidConfig("memory capacity must be at least 1".into()));
        }
        if self.sample_interval == 0 {
            return Err(Error::InvalidConfig("sample_interval must be at least 1".into()));
        }
        if self.window() < self.sample_interval {
            return Err(Error::InvalidConfig(
                "candidate window must cover at least one sample interval".into(),
            ));
        }
        Ok(())
    }
}

/// What the segmenter produced for a past frame, kept for later selection.
#[derive(Clone, Debug)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub prob: ProbMap,
    pub appearance: Frame,
    pub scores: FrameScores,
}

/// How an entry got into the bank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admission {
    First,
    Tier1,
    Tier2,
    Recent,
}

#[derive(Clone, Debug)]
pub struct MemoryEntry {
    pub frame_index: usize,
    /// Probability map after pixel filtering (unfiltered when spatial
    /// selection is off).
    pub filtered_map: ProbMap,
    /// Support of `filtered_map`.
    pub mask: Mask,
    pub appearance: Frame,
    pub scores: FrameScores,
    pub is_first_frame: bool,
    pub admission: Admission,
}

impl MemoryEntry {
    fn from_record(rec: &FrameRecord, spatial: Option<f32>, admission: Admission) -> Self {
        let filtered_map = match spatial {
            Some(tau) => spatial_select(&rec.prob, tau).0,
            None => rec.prob.clone(),
        };
        let mask = filtered_map.threshold(0.0);
        MemoryEntry {
            frame_index: rec.frame_index,
            filtered_map,
            mask,
            appearance: rec.appearance.clone(),
            scores: rec.scores,
            is_first_frame: admission == Admission::First,
            admission,
        }
    }
}

/// First-frame entry plus up to `capacity - 1` selected past frames.
#[derive(Clone, Debug)]
pub struct MemoryBank {
    capacity: usize,
    entries: Vec<MemoryEntry>,
}

impl MemoryBank {
    /// Bank holding only the first prompted frame.
    pub fn initialize(capacity: usize, first: &FrameRecord, spatial: Option<f32>) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("memory capacity must be at least 1".into()));
        }
        let entry = MemoryEntry::from_record(first, spatial, Admission::First);
        if entry.mask.is_empty() {
            return Err(Error::EmptyMask("first-frame memory entry"));
        }
        Ok(MemoryBank {
            capacity,
            entries: vec![entry],
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first(&self) -> Result<&MemoryEntry> {
        self.entries
            .iter()
            .find(|e| e.is_first_frame)
            .ok_or(Error::MissingFirstFrame)
    }

    pub fn frame_indices(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.frame_index).collect()
    }

    /// Replace every non-first entry with an unfiltered copy of `records`, in
    /// order. Meant for building test fixtures.
    pub fn with_entries(&self, records: &[FrameRecord]) -> Result<MemoryBank> {
        let first = self.first()?.clone();
        let mut entries = vec![first];
        for r in records.iter().take(self.capacity - 1) {
            entries.push(MemoryEntry::from_record(r, None, Admission::Recent));
        }
        Ok(MemoryBank {
            capacity: self.capacity,
            entries,
        })
    }
}

/// Past frames within the candidate window whose distance to
/// `current_frame` is a multiple of the sample interval. The first frame is
/// never a candidate. Returned oldest first.
pub fn sample_candidates<'a>(
    history: &'a [FrameRecord],
    cfg: &SelectionConfig,
    current_frame: usize,
    first_frame: usize,
) -> Vec<&'a FrameRecord> {
    let lo = current_frame.saturating_sub(cfg.window());
    let interval = cfg.sample_interval.max(1);
    history
        .iter()
        .filter(|r| {
            r.frame_index >= lo
                && r.frame_index < current_frame
                && r.frame_index != first_frame
                && (current_frame - r.frame_index).is_multiple_of(interval)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub frame_index: usize,
    pub scores: FrameScores,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// `s_iou` not above `tau_rank` and not a tier-1 frame.
    LowConfidence,
    /// Eligible, but every slot was already taken.
    SlotsFull,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub frame: usize,
    pub reason: RejectReason,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TemporalSelection {
    pub tier1: Vec<usize>,
    pub tier2: Vec<usize>,
    pub rejected: Vec<Rejection>,
}

impl TemporalSelection {
    /// Chosen frames, tier 1 first.
    pub fn chosen(&self) -> Vec<usize> {
        self.tier1.iter().chain(&self.tier2).copied().collect()
    }
}

/// Two-tier frame selection, at most `slots` frames.
pub fn temporal_select(
    candidates: &[Candidate],
    cfg: &SelectionConfig,
    slots: usize,
) -> TemporalSelection {
    let mut out = TemporalSelection::default();
    let mut pool: Vec<&Candidate> = candidates.iter().collect();
    pool.sort_by_key(|c| std::cmp::Reverse(c.frame_index));

    let mut rest = Vec::new();
    let mut overflow = Vec::new();
    for c in pool {
        let passes = c.scores.s_iou > cfg.tau_iou && c.scores.s_occ > cfg.tau_occ;
        match (passes, out.tier1.len() < slots) {
            (true, true) => out.tier1.push(c.frame_index),
            (true, false) => overflow.push(c.frame_index),
            (false, _) => rest.push(c),
        }
    }
    out.rejected.extend(overflow.into_iter().map(|frame| Rejection {
        frame,
        reason: RejectReason::SlotsFull,
    }));

    let (mut ranked, low): (Vec<&Candidate>, Vec<&Candidate>) =
        rest.into_iter().partition(|c| c.scores.s_iou > cfg.tau_rank);
    ranked.sort_by(|a, b| {
        b.scores
            .total()
            .total_cmp(&a.scores.total())
            .then(b.frame_index.cmp(&a.frame_index))
    });
    let leftover = slots - out.tier1.len();
    for (i, c) in ranked.into_iter().enumerate() {
        if i < leftover {
            out.tier2.push(c.frame_index);
        } else {
            out.rejected.push(Rejection {
                frame: c.frame_index,
                reason: RejectReason::SlotsFull,
            });
        }
    }
    out.rejected.extend(low.into_iter().map(|c| Rejection {
        frame: c.frame_index,
        reason: RejectReason::LowConfidence,
    }));
    out
}

/// Zero every pixel not strictly above `tau_pix`; survivors keep their value.
pub fn spatial_select(p: &ProbMap, tau_pix: f32) -> (ProbMap, Mask) {
    let filtered = p.map(|v| if v > tau_pix { v } else { 0.0 });
    let mask = filtered.threshold(0.0);
    (filtered, mask)
}

/// Which halves of the selection are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdatePolicy {
    /// Confidence-based frame choice instead of most-recent.
    pub temporal: bool,
    /// Per-pixel thresholding of stored probability maps.
    pub spatial: bool,
}

impl UpdatePolicy {
    pub const FIFO: UpdatePolicy = UpdatePolicy {
        temporal: false,
        spatial: false,
    };
    pub const STMS: UpdatePolicy = UpdatePolicy {
        temporal: true,
        spatial: true,
    };
}

/// One line of the selection audit log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub frame: usize,
    pub tier1: Vec<usize>,
    pub tier2: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub recent: Vec<usize>,
    pub rejected: Vec<Rejection>,
}

/// Rebuild the bank for segmenting `current_frame` from the frame history.
pub fn update_memory(
    bank: &MemoryBank,
    history: &[FrameRecord],
    cfg: &SelectionConfig,
    policy: UpdatePolicy,
    current_frame: usize,
) -> Result<(MemoryBank, SelectionRecord)> {
    let first = bank.first()?;
    let slots = bank.capacity - 1;
    let spatial = policy.spatial.then_some(cfg.tau_pix);
    let mut record = SelectionRecord {
        frame: current_frame,
        tier1: Vec::new(),
        tier2: Vec::new(),
        recent: Vec::new(),
        rejected: Vec::new(),
    };
    let mut entries = vec![first.clone()];
    let by_index = |i: usize| history.iter().find(|r| r.frame_index == i);

    if policy.temporal {
        let pool = sample_candidates(history, cfg, current_frame, first.frame_index);
        let candidates: Vec<Candidate> = pool
            .iter()
            .map(|r| Candidate {
                frame_index: r.frame_index,
                scores: r.scores,
            })
            .collect();
        let sel = temporal_select(&candidates, cfg, slots);
        for &i in &sel.tier1 {
            entries.push(MemoryEntry::from_record(by_index(i).unwrap(), spatial, Admission::Tier1));
        }
        for &i in &sel.tier2 {
            entries.push(MemoryEntry::from_record(by_index(i).unwrap(), spatial, Admission::Tier2));
        }
        record.tier1 = sel.tier1;
        record.tier2 = sel.tier2;
        record.rejected = sel.rejected;
    } else {
        let mut recent: Vec<&FrameRecord> = history
            .iter()
            .filter(|r| r.frame_index < current_frame && r.frame_index != first.frame_index)
            .collect();
        recent.sort_by_key(|r| std::cmp::Reverse(r.frame_index));
        for r in recent.into_iter().take(slots) {
            entries.push(MemoryEntry::from_record(r, spatial, Admission::Recent));
            record.recent.push(r.frame_index);
        }
    }

    Ok((
        MemoryBank {
            capacity: bank.capacity,
            entries,
        },
        record,
    ))
}
