//! The per-frame propagation loop: build motion prompts, segment, record
//! keypoints, rebuild the memory bank.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{estimate_flow, flow_box_prompt, masked_flow, warp_mask_forward};
use crate::frame::Frame;
use crate::mask::{BBox, Mask, ProbMap};
use crate::memory::{
    update_memory, Admission, FrameRecord, FrameScores, MemoryBank, SelectionConfig, SelectionRecord,
    UpdatePolicy,
};
use crate::metrics::{aggregate, score_frame, MetricsReport};
use crate::segmenter::{build_segmenter, MatcherConfig, OracleConfig, PromptSet, SegmenterOutput};
use crate::simulator::{generate_scenario, GroundTruthRecord, Scenario};
use crate::sparse::{
    extract_keypoints, extrapolate_keypoints, keypoints_to_point_prompts, KeyPointSet, MotionHistory,
    DEFAULT_KEYPOINT_COUNT,
};

/// Where a run reads its frames from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Input {
    /// Built-in scenario name or path to a scenario manifest.
    Scenario { scenario: String },
    /// Directory of `%05d.pgm` frames, with ground-truth masks in the same
    /// layout. Only the first mask is required unless the oracle is used.
    Directories {
        frames: std::path::PathBuf,
        masks: std::path::PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// `oracle` or `matcher`.
    pub segmenter: String,
    /// Point prompts from extrapolated keypoints.
    pub mgp_sparse: bool,
    /// Box prompts from flow-warped masks.
    pub mgp_dense: bool,
    /// Confidence-based frame choice for the memory bank instead of FIFO.
    pub stms_temporal: bool,
    /// Per-pixel filtering of stored probability maps.
    pub stms_spatial: bool,
    pub selection: SelectionConfig,
    pub keypoint_count: usize,
    /// Frame spacing of the flow pair.
    pub flow_interval: usize,
    pub seed: u64,
    /// Score frames whose ground truth is occluded.
    pub include_occluded: bool,
    pub oracle: OracleConfig,
    pub matcher: MatcherConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<Input>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<std::path::PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            segmenter: "oracle".into(),
            mgp_sparse: true,
            mgp_dense: true,
            stms_temporal: true,
            stms_spatial: true,
            selection: SelectionConfig::default(),
            keypoint_count: DEFAULT_KEYPOINT_COUNT,
            flow_interval: 1,
            seed: 0,
            include_occluded: true,
            oracle: OracleConfig::default(),
            matcher: MatcherConfig::default(),
            input: None,
            output: None,
        }
    }
}

/// The four ablation switches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toggles {
    pub sparse: bool,
    pub dense: bool,
    pub temporal: bool,
    pub spatial: bool,
}

impl Toggles {
    pub const BASELINE: Toggles = Toggles {
        sparse: false,
        dense: false,
        temporal: false,
        spatial: false,
    };
    pub const FULL: Toggles = Toggles {
        sparse: true,
        dense: true,
        temporal: true,
        spatial: true,
    };

    /// All 16 combinations.
    pub fn all() -> Vec<Toggles> {
        (0..16u8)
            .map(|b| Toggles {
                sparse: b & 1 != 0,
                dense: b & 2 != 0,
                temporal: b & 4 != 0,
                spatial: b & 8 != 0,
            })
            .collect()
    }

    /// Short label such as `SM+DM` or `baseline`.
    pub fn label(&self) -> String {
        let parts: Vec<&str> = [
            (self.sparse, "SM"),
            (self.dense, "DM"),
            (self.temporal, "TS"),
            (self.spatial, "SS"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        if parts.is_empty() {
            "baseline".into()
        } else {
            parts.join("+")
        }
    }
}

impl RunConfig {
    pub fn toggles(&self) -> Toggles {
        Toggles {
            sparse: self.mgp_sparse,
            dense: self.mgp_dense,
            temporal: self.stms_temporal,
            spatial: self.stms_spatial,
        }
    }

    pub fn with_toggles(mut self, t: Toggles) -> Self {
        self.mgp_sparse = t.sparse;
        self.mgp_dense = t.dense;
        self.stms_temporal = t.temporal;
        self.stms_spatial = t.spatial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.selection.validate()?;
        self.oracle.validate()?;
        if self.flow_interval == 0 {
            return Err(Error::InvalidConfig("flow_interval must be at least 1".into()));
        }
        if self.keypoint_count.is_multiple_of(2) || !(1..=13).contains(&self.keypoint_count) {
            return Err(Error::KeypointCount(self.keypoint_count));
        }
        Ok(())
    }

    fn policy(&self) -> UpdatePolicy {
        UpdatePolicy {
            temporal: self.stms_temporal,
            spatial: self.stms_spatial,
        }
    }
}

/// Compact view of one bank entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankEntrySummary {
    pub frame_index: usize,
    pub scores: FrameScores,
    pub admission: Admission,
}

/// Bank contents used to segment `frame`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankSnapshot {
    pub frame: usize,
    pub capacity: usize,
    pub entries: Vec<BankEntrySummary>,
}

impl BankSnapshot {
    fn of(frame: usize, bank: &MemoryBank) -> Self {
        BankSnapshot {
            frame,
            capacity: bank.capacity(),
            entries: bank
                .entries()
                .iter()
                .map(|e| BankEntrySummary {
                    frame_index: e.frame_index,
                    scores: e.scores,
                    admission: e.admission,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// One per frame; index 0 is the first-frame prompt itself.
    pub outputs: Vec<SegmenterOutput>,
    /// Prompts handed to the segmenter, one per frame.
    pub prompts: Vec<PromptSet>,
    /// Keypoints of every nonempty output mask.
    pub keypoints: Vec<KeyPointSet>,
    pub selection_log: Vec<SelectionRecord>,
    pub banks: Vec<BankSnapshot>,
    /// Present when ground truth was supplied. Frame 0 is not scored.
    pub report: Option<MetricsReport>,
}

impl RunOutput {
    pub fn masks(&self) -> impl Iterator<Item = &Mask> {
        self.outputs.iter().map(|o| &o.mask)
    }
}

/// Mutable state carried from one frame to the next.
struct PipelineState {
    motion: MotionHistory,
    bank: MemoryBank,
    records: Vec<FrameRecord>,
    last_mask: Mask,
}

/// Box prompt for frame `t` from the flow between frames `t-1-interval` and
/// `t-1`, anchored on the previous mask and pushed one frame forward.
fn dense_box_prompt(frames: &[Frame], t: usize, interval: usize, last_mask: &Mask) -> Result<Option<BBox>> {
    if last_mask.is_empty() || t < 1 + interval {
        return Ok(None);
    }
    let newer = &frames[t - 1];
    let older = &frames[t - 1 - interval];
    // flow from the newer frame backwards is defined on the pixels the mask
    // actually covers; flipping it gives the forward motion of those pixels
    let flow = estimate_flow(newer, older)?.negated().with_dt(interval)?;
    let (flow, _) = masked_flow(&flow, last_mask)?;
    match warp_mask_forward(last_mask, &flow, 1) {
        Ok(warped) => Ok(Some(flow_box_prompt(&warped)?)),
        Err(Error::EmptyMask(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Propagate `first_mask` through `frames`.
pub fn run_sequence(
    frames: &[Frame],
    first_mask: &Mask,
    ground_truth: Option<&[GroundTruthRecord]>,
    cfg: &RunConfig,
) -> Result<RunOutput> {
    cfg.validate()?;
    let first = frames.first().ok_or(Error::NoFrames)?;
    let (w, h) = first.dims();
    for f in frames {
        f.ensure_same_dims(w, h)?;
    }
    first_mask.ensure_same_dims(w, h)?;
    if first_mask.is_empty() {
        return Err(Error::EmptyMask("first-frame mask"));
    }
    if let Some(gt) = ground_truth {
        if gt.len() != frames.len() {
            return Err(Error::CountMismatch(frames.len(), gt.len()));
        }
    }

    let mut oracle_cfg = cfg.oracle.clone();
    oracle_cfg.seed = cfg.seed;
    let mut segmenter = build_segmenter(&cfg.segmenter, ground_truth, &oracle_cfg, &cfg.matcher)?;
    let policy = cfg.policy();
    let window = cfg.selection.window();

    let first_out = SegmenterOutput::new(ProbMap::from_mask(first_mask, 1.0, 0.0), FrameScores::new(1.0, 1.0)?);
    let first_record = FrameRecord {
        frame_index: 0,
        prob: first_out.prob.clone(),
        appearance: first.clone(),
        scores: first_out.scores,
    };
    let first_kp = extract_keypoints(first_mask, cfg.keypoint_count, 0)?;
    let mut state = PipelineState {
        motion: MotionHistory::default(),
        bank: MemoryBank::initialize(cfg.selection.capacity, &first_record, policy.spatial.then_some(cfg.selection.tau_pix))?,
        records: Vec::new(),
        last_mask: first_mask.clone(),
    };
    state.motion.push(first_kp.clone())?;

    let mut outputs = vec![first_out];
    let mut prompts_log = vec![PromptSet {
        first_frame_mask: Some(first_mask.clone()),
        ..PromptSet::default()
    }];
    let mut keypoints = vec![first_kp];
    let mut selection_log = Vec::new();
    let mut banks = Vec::new();

    for t in 1..frames.len() {
        let mut prompts = PromptSet::default();
        if cfg.mgp_sparse && state.motion.len() >= 2 {
            let horizon = t - state.motion.latest().map_or(0, |k| k.frame_index);
            let predicted = extrapolate_keypoints(&state.motion, horizon)?;
            prompts.positive_points = keypoints_to_point_prompts(&predicted, w, h);
        }
        if cfg.mgp_dense {
            prompts.box_prompt = dense_box_prompt(frames, t, cfg.flow_interval, &state.last_mask)?;
        }

        banks.push(BankSnapshot::of(t, &state.bank));
        let out = segmenter.segment(t, &frames[t], &prompts, &state.bank)?;
        if !out.mask.is_empty() {
            let kp = extract_keypoints(&out.mask, cfg.keypoint_count, t)?;
            state.motion.push(kp.clone())?;
            keypoints.push(kp);
        }
        state.records.push(FrameRecord {
            frame_index: t,
            prob: out.prob.clone(),
            appearance: frames[t].clone(),
            scores: out.scores,
        });
        // records older than the candidate window are never looked at again,
        // but FIFO needs the most recent `capacity` of them
        let keep = window.max(cfg.selection.capacity);
        if state.records.len() > keep {
            let drop = state.records.len() - keep;
            state.records.drain(..drop);
        }
        state.last_mask = out.mask.clone();
        if t + 1 < frames.len() {
            let (bank, log) = update_memory(&state.bank, &state.records, &cfg.selection, policy, t + 1)?;
            state.bank = bank;
            selection_log.push(log);
        }
        outputs.push(out);
        prompts_log.push(prompts);
    }

    let report = match ground_truth {
        Some(gt) => {
            let per_frame = outputs
                .iter()
                .zip(gt)
                .skip(1)
                .map(|(o, g)| score_frame(g.frame_index, &o.mask, &g.mask, g.occluded))
                .collect::<Result<Vec<_>>>()?;
            if per_frame.is_empty() {
                None
            } else {
                Some(aggregate(&per_frame, cfg.include_occluded)?)
            }
        }
        None => None,
    };

    Ok(RunOutput {
        outputs,
        prompts: prompts_log,
        keypoints,
        selection_log,
        banks,
        report,
    })
}

/// Generate a scenario and run the pipeline on it.
pub fn run_scenario(s: &Scenario, cfg: &RunConfig) -> Result<RunOutput> {
    let seq = generate_scenario(s)?;
    run_sequence(&seq.frames, &seq.ground_truth[0].mask, Some(&seq.ground_truth), cfg)
}

/// Mean J&F over several scenarios, each run independently.
pub fn suite_score(scenarios: &[Scenario], cfg: &RunConfig) -> Result<f64> {
    if scenarios.is_empty() {
        return Err(Error::NoFrames);
    }
    let scores = scenarios
        .par_iter()
        .map(|s| {
            run_scenario(s, cfg)?
                .report
                .map(|r| r.j_and_f)
                .ok_or(Error::NoFrames)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Parameters accepted by [`sweep`].
pub const SWEEP_PARAMETERS: [&str; 5] = ["keypoints", "flow_interval", "tau_iou", "tau_occ", "tau_rank"];

/// Copy of `cfg` with one named hyperparameter set to `value`.
pub fn apply_parameter(cfg: &RunConfig, param: &str, value: f64) -> Result<RunConfig> {
    let mut c = cfg.clone();
    let as_count = |v: f64| -> Result<usize> {
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::InvalidConfig(format!("{param} needs a whole number, got {v}")));
        }
        Ok(v as usize)
    };
    match param {
        "keypoints" => c.keypoint_count = as_count(value)?,
        "flow_interval" => c.flow_interval = as_count(value)?,
        "tau_iou" => c.selection.tau_iou = value,
        "tau_occ" => c.selection.tau_occ = value,
        "tau_rank" => c.selection.tau_rank = value,
        other => return Err(Error::UnknownParameter(other.to_string())),
    }
    c.validate()?;
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub j_and_f: f64,
}

/// Run the suite once per value of one hyperparameter. Values run in
/// parallel; rows come back in input order.
pub fn sweep(cfg: &RunConfig, param: &str, values: &[f64], scenarios: &[Scenario]) -> Result<Vec<SweepRow>> {
    if !SWEEP_PARAMETERS.contains(&param) {
        return Err(Error::UnknownParameter(param.to_string()));
    }
    let configs = values
        .iter()
        .map(|&v| apply_parameter(cfg, param, v))
        .collect::<Result<Vec<_>>>()?;
    configs
        .par_iter()
        .zip(values)
        .map(|(c, &value)| {
            Ok(SweepRow {
                value,
                j_and_f: suite_score(scenarios, c)?,
            })
        })
        .collect()
}

/// `<param>,j_and_f` CSV.
pub fn write_sweep_csv<W: std::io::Write>(writer: W, param: &str, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([param, "j_and_f"])?;
    for r in rows {
        w.write_record([r.value.to_string(), r.j_and_f.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("sweep csv", e))?;
    Ok(())
}
