//! Files on disk: PGM frame and mask sequences, scenario manifests, run
//! artifacts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, GrayImage, ImageEncoder};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::frame::Frame;
use crate::mask::{Mask, ProbMap};
use crate::pipeline::{Input, RunConfig, RunOutput};
use crate::simulator::{generate_scenario, scenario_by_name, GroundTruthRecord, Scenario, Sequence};
use crate::sparse::write_keypoint_trace;

pub const FRAMES_DIR: &str = "frames";
pub const GT_DIR: &str = "gt_masks";
pub const MASKS_DIR: &str = "masks";
pub const PROBS_DIR: &str = "probs";
pub const MANIFEST: &str = "manifest.json";

/// `00042.pgm`.
pub fn frame_file_name(index: usize) -> String {
    format!("{index:05}.pgm")
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_gray(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    let file = create_file(path)?;
    PnmEncoder::new(file)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(bytes, width as u32, height as u32, ExtendedColorType::L8)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

fn read_gray(path: &Path) -> Result<GrayImage> {
    image::open(path)
        .map(|img| img.to_luma8())
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

fn to_byte(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_frame_pgm(path: &Path, f: &Frame) -> Result<()> {
    let bytes: Vec<u8> = f.data().iter().map(|&v| to_byte(v)).collect();
    write_gray(path, f.width(), f.height(), &bytes)
}

pub fn read_frame_pgm(path: &Path) -> Result<Frame> {
    let img = read_gray(path)?;
    let data = img.as_raw().iter().map(|&b| b as f32 / 255.0).collect();
    Frame::new(img.width() as usize, img.height() as usize, data)
}

/// Foreground 255, background 0.
pub fn write_mask_pgm(path: &Path, m: &Mask) -> Result<()> {
    let bytes: Vec<u8> = m.cells().iter().map(|&c| if c { 255 } else { 0 }).collect();
    write_gray(path, m.width(), m.height(), &bytes)
}

/// Any value above 127 is foreground.
pub fn read_mask_pgm(path: &Path) -> Result<Mask> {
    let img = read_gray(path)?;
    let cells = img.as_raw().iter().map(|&b| b > 127).collect();
    Mask::from_cells(img.width() as usize, img.height() as usize, cells)
}

/// Probabilities scaled to `round(p * 255)`.
pub fn write_prob_pgm(path: &Path, p: &ProbMap) -> Result<()> {
    let bytes: Vec<u8> = p.values().iter().map(|&v| to_byte(v)).collect();
    write_gray(path, p.width(), p.height(), &bytes)
}

/// Every `*.pgm` in `dir`, sorted by name.
pub fn list_pgm(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn read_frames(dir: &Path) -> Result<Vec<Frame>> {
    list_pgm(dir)?.iter().map(|p| read_frame_pgm(p)).collect()
}

pub fn read_masks(dir: &Path) -> Result<Vec<Mask>> {
    list_pgm(dir)?.iter().map(|p| read_mask_pgm(p)).collect()
}

#[derive(Serialize)]
struct FlowSidecar {
    width: usize,
    height: usize,
    dt: usize,
    /// Pixel value `b` decodes to `offset + scale * b / 255`.
    u_offset: f32,
    u_scale: f32,
    v_offset: f32,
    v_scale: f32,
}

/// Write `u.pgm` and `v.pgm`, each affinely mapped to the full byte range,
/// plus `flow.json` with the decoding constants.
pub fn write_flow(dir: &Path, flow: &FlowField) -> Result<()> {
    create_dir(dir)?;
    let encode = |buf: &[f32]| -> (Vec<u8>, f32, f32) {
        let lo = buf.iter().copied().fold(f32::INFINITY, f32::min);
        let hi = buf.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let scale = if hi > lo { hi - lo } else { 1.0 };
        (buf.iter().map(|&x| to_byte((x - lo) / scale)).collect(), lo, scale)
    };
    let (u, u_offset, u_scale) = encode(flow.u());
    let (v, v_offset, v_scale) = encode(flow.v());
    write_gray(&dir.join("u.pgm"), flow.width(), flow.height(), &u)?;
    write_gray(&dir.join("v.pgm"), flow.width(), flow.height(), &v)?;
    let sidecar = FlowSidecar {
        width: flow.width(),
        height: flow.height(),
        dt: flow.dt(),
        u_offset,
        u_scale,
        v_offset,
        v_scale,
    };
    write_text(&dir.join("flow.json"), &serde_json::to_string_pretty(&sidecar)?)
}

/// Built-in scenario name, or path to a manifest written by [`write_sequence`].
pub fn load_scenario(name_or_path: &str) -> Result<Scenario> {
    match scenario_by_name(name_or_path) {
        Ok(s) => Ok(s),
        Err(Error::UnknownScenario(_)) if Path::new(name_or_path).exists() => {
            let path = Path::new(name_or_path);
            let manifest = if path.is_dir() { path.join(MANIFEST) } else { path.to_path_buf() };
            let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
            let s: Scenario = serde_json::from_str(&text)?;
            s.validate()?;
            Ok(s)
        }
        Err(e) => Err(e),
    }
}

/// `frames/`, `gt_masks/` and `manifest.json` under `dir`.
pub fn write_sequence(dir: &Path, scenario: &Scenario, seq: &Sequence) -> Result<()> {
    let frames = dir.join(FRAMES_DIR);
    let masks = dir.join(GT_DIR);
    create_dir(&frames)?;
    create_dir(&masks)?;
    for (i, (f, gt)) in seq.frames.iter().zip(&seq.ground_truth).enumerate() {
        write_frame_pgm(&frames.join(frame_file_name(i)), f)?;
        write_mask_pgm(&masks.join(frame_file_name(i)), &gt.mask)?;
    }
    write_text(&dir.join(MANIFEST), &serde_json::to_string_pretty(scenario)?)
}

/// Frames plus whatever ground truth the input provides.
#[derive(Clone, Debug)]
pub struct LoadedInput {
    pub frames: Vec<Frame>,
    pub first_mask: Mask,
    pub ground_truth: Option<Vec<GroundTruthRecord>>,
}

/// Masks read from disk as ground truth; an empty mask counts as occluded.
pub fn ground_truth_from_masks(masks: Vec<Mask>) -> Vec<GroundTruthRecord> {
    masks
        .into_iter()
        .enumerate()
        .map(|(frame_index, mask)| GroundTruthRecord {
            frame_index,
            occluded: mask.is_empty(),
            mask,
        })
        .collect()
}

pub fn load_input(input: &Input) -> Result<LoadedInput> {
    match input {
        Input::Scenario { scenario } => {
            let s = load_scenario(scenario)?;
            let seq = generate_scenario(&s)?;
            Ok(LoadedInput {
                first_mask: seq.ground_truth[0].mask.clone(),
                frames: seq.frames,
                ground_truth: Some(seq.ground_truth),
            })
        }
        Input::Directories { frames, masks } => {
            let frames = read_frames(frames)?;
            if frames.is_empty() {
                return Err(Error::NoFrames);
            }
            let masks = read_masks(masks)?;
            let first_mask = masks.first().cloned().ok_or(Error::MissingGroundTruth(0))?;
            let ground_truth = match masks.len() {
                1 => None,
                n if n == frames.len() => Some(ground_truth_from_masks(masks)),
                n => return Err(Error::CountMismatch(frames.len(), n)),
            };
            Ok(LoadedInput {
                frames,
                first_mask,
                ground_truth,
            })
        }
    }
}

/// Persist everything a run produced:
///
/// ```text
/// masks/%05d.pgm  probs/%05d.pgm  keypoints.csv  selection_log.jsonl
/// banks.jsonl  config.json  metrics.csv  metrics.json
/// ```
pub fn write_run_output(dir: &Path, cfg: &RunConfig, out: &RunOutput) -> Result<()> {
    let masks = dir.join(MASKS_DIR);
    let probs = dir.join(PROBS_DIR);
    create_dir(&masks)?;
    create_dir(&probs)?;
    for (i, o) in out.outputs.iter().enumerate() {
        write_mask_pgm(&masks.join(frame_file_name(i)), &o.mask)?;
        write_prob_pgm(&probs.join(frame_file_name(i)), &o.prob)?;
    }
    write_keypoint_trace(create_file(&dir.join("keypoints.csv"))?, &out.keypoints)?;
    write_json_lines(&dir.join("selection_log.jsonl"), &out.selection_log)?;
    write_json_lines(&dir.join("banks.jsonl"), &out.banks)?;
    write_text(&dir.join("config.json"), &serde_json::to_string_pretty(cfg)?)?;
    if let Some(report) = &out.report {
        write_report(dir, report)?;
    }
    Ok(())
}

/// `metrics.csv` and `metrics.json` under `dir`.
pub fn write_report(dir: &Path, report: &crate::metrics::MetricsReport) -> Result<()> {
    create_dir(dir)?;
    report.write_csv(create_file(&dir.join("metrics.csv"))?)?;
    write_text(&dir.join("metrics.json"), &report.summary_json()?)
}

pub fn write_json_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create_file(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
