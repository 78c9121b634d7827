//! Deterministic synthetic videos: one textured shape moving over a textured
//! background, with scripted occlusion intervals and an optional static
//! look-alike distractor. Ground truth comes for free.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::mask::{Mask, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Pixel centers within `width/2` and `height/2` of the center.
    Rect { width: f64, height: f64 },
    /// Pixel centers within `radius` of the center.
    Disc { radius: f64 },
}

impl Shape {
    fn contains(&self, dx: f64, dy: f64) -> bool {
        match *self {
            Shape::Rect { width, height } => dx.abs() <= width / 2.0 && dy.abs() <= height / 2.0,
            Shape::Disc { radius } => dx * dx + dy * dy <= radius * radius,
        }
    }

    fn half_extent(&self) -> (f64, f64) {
        match *self {
            Shape::Rect { width, height } => (width / 2.0, height / 2.0),
            Shape::Disc { radius } => (radius, radius),
        }
    }

    fn validate(&self, field: &'static str) -> Result<()> {
        let ok = match *self {
            Shape::Rect { width, height } => width > 0.0 && height > 0.0,
            Shape::Disc { radius } => radius > 0.0,
        };
        if !ok {
            return Err(Error::InvalidScenario {
                field,
                reason: "shape dimensions must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub texture_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    ConstantVelocity {
        start: Point,
        velocity: Point,
    },
    /// `start + base_velocity * t + amplitude * sin(2 pi t / period)`.
    Sinusoidal {
        start: Point,
        base_velocity: Point,
        amplitude: Point,
        period: f64,
    },
}

impl Trajectory {
    /// Object center at frame `t`.
    pub fn position(&self, t: usize) -> Point {
        let t = t as f64;
        match self {
            Trajectory::ConstantVelocity { start, velocity } => {
                Point::new(start.x + velocity.x * t, start.y + velocity.y * t)
            }
            Trajectory::Sinusoidal {
                start,
                base_velocity,
                amplitude,
                period,
            } => {
                let s = (std::f64::consts::TAU * t / period).sin();
                Point::new(
                    start.x + base_velocity.x * t + amplitude.x * s,
                    start.y + base_velocity.y * t + amplitude.y * s,
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub texture_seed: u64,
    /// Scale of the background texture around mid-gray, in `[0, 1]`.
    pub contrast: f32,
}

/// A static second shape that is not the target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distractor {
    pub shape: Shape,
    pub center: Point,
    pub texture_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
    pub object: ObjectSpec,
    pub trajectory: Trajectory,
    /// Inclusive `[start, end]` frame ranges in which the object is hidden.
    pub occlusions: Vec<[usize; 2]>,
    pub background: Background,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distractor: Option<Distractor>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthRecord {
    pub frame_index: usize,
    /// Empty while occluded.
    pub mask: Mask,
    pub occluded: bool,
}

/// Rendered frames with their ground truth, index-aligned.
#[derive(Clone, Debug)]
pub struct Sequence {
    pub frames: Vec<Frame>,
    pub ground_truth: Vec<GroundTruthRecord>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidScenario {
        field,
        reason: reason.into(),
    }
}

impl Scenario {
    pub fn is_occluded(&self, t: usize) -> bool {
        self.occlusions.iter().any(|&[s, e]| (s..=e).contains(&t))
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(invalid("width/height", "frames must be at least 8x8"));
        }
        if self.num_frames == 0 {
            return Err(invalid("num_frames", "must be at least 1"));
        }
        self.object.shape.validate("object.shape")?;
        if let Some(d) = &self.distractor {
            d.shape.validate("distractor.shape")?;
        }
        if !(0.0..=1.0).contains(&self.background.contrast) {
            return Err(invalid("background.contrast", "must lie in [0, 1]"));
        }
        if let Trajectory::Sinusoidal { period, .. } = self.trajectory {
            if period.is_nan() || period <= 0.0 {
                return Err(invalid("trajectory.period", "must be positive"));
            }
        }
        for &[s, e] in &self.occlusions {
            if s > e || e >= self.num_frames {
                return Err(invalid(
                    "occlusions",
                    format!("[{s}, {e}] is not an interval within [0, {})", self.num_frames),
                ));
            }
            if s == 0 {
                return Err(invalid("occlusions", "the first frame must be visible"));
            }
        }
        let c = self.trajectory.position(0);
        let (hx, hy) = self.object.shape.half_extent();
        let inside = c.x - hx >= 0.0
            && c.y - hy >= 0.0
            && c.x + hx <= (self.width - 1) as f64
            && c.y + hy <= (self.height - 1) as f64;
        if !inside {
            return Err(invalid("trajectory.start", "object must start fully inside the frame"));
        }
        if self.object_mask(0).is_empty() {
            return Err(invalid("object.shape", "object covers no pixel centers"));
        }
        Ok(())
    }

    /// Rasterized object at frame `t`, ignoring occlusion.
    pub fn object_mask(&self, t: usize) -> Mask {
        let c = self.trajectory.position(t);
        shape_mask(self.width, self.height, &self.object.shape, c)
    }

    /// Frame `t`'s ground truth.
    pub fn ground_truth(&self, t: usize) -> GroundTruthRecord {
        let occluded = self.is_occluded(t);
        let mask = if occluded {
            Mask::new(self.width, self.height).expect("validated dimensions")
        } else {
            self.object_mask(t)
        };
        GroundTruthRecord {
            frame_index: t,
            mask,
            occluded,
        }
    }
}

fn shape_mask(width: usize, height: usize, shape: &Shape, c: Point) -> Mask {
    Mask::from_fn(width, height, |x, y| shape.contains(x as f64 - c.x, y as f64 - c.y))
        .expect("validated dimensions")
}

/// Uniform noise smoothed by a 3x3 box, values near 0.5.
fn smooth_noise(width: usize, height: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f32> = (0..width * height).map(|_| rng.gen::<f32>()).collect();
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut s = 0.0;
            let mut n = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height {
                        s += raw[ny as usize * width + nx as usize];
                        n += 1.0;
                    }
                }
            }
            out[y * width + x] = s / n;
        }
    }
    out
}

/// Smoothed noise has a standard deviation of roughly a third of raw uniform
/// noise; stretch it back so `contrast = 1` spans most of `[0, 1]`.
fn stretch(v: f32, contrast: f32) -> f32 {
    (0.5 + 3.0 * contrast * (v - 0.5)).clamp(0.0, 1.0)
}

struct Texture {
    size: usize,
    data: Vec<f32>,
}

impl Texture {
    fn for_shape(shape: &Shape, seed: u64) -> Texture {
        let (hx, hy) = shape.half_extent();
        let size = 2 * hx.max(hy).ceil() as usize + 5;
        Texture {
            size,
            data: smooth_noise(size, size, seed),
        }
    }

    /// Sample at an offset from the shape's rounded center.
    fn at(&self, dx: i64, dy: i64) -> f32 {
        let half = (self.size / 2) as i64;
        let x = (dx + half).clamp(0, self.size as i64 - 1) as usize;
        let y = (dy + half).clamp(0, self.size as i64 - 1) as usize;
        self.data[y * self.size + x]
    }
}

fn mix_seed(scenario_seed: u64, texture_seed: u64) -> u64 {
    scenario_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(texture_seed)
}

/// Render every frame and its ground truth.
pub fn generate_scenario(s: &Scenario) -> Result<Sequence> {
    s.validate()?;
    let (w, h) = (s.width, s.height);
    let background: Vec<f32> = smooth_noise(w, h, mix_seed(s.seed, s.background.texture_seed))
        .into_iter()
        .map(|v| stretch(v, s.background.contrast))
        .collect();
    let object_tex = Texture::for_shape(&s.object.shape, mix_seed(s.seed, s.object.texture_seed));
    let distractor = s.distractor.as_ref().map(|d| {
        (
            d,
            Texture::for_shape(&d.shape, mix_seed(s.seed, d.texture_seed)),
            shape_mask(w, h, &d.shape, d.center),
        )
    });

    let mut frames = Vec::with_capacity(s.num_frames);
    let mut ground_truth = Vec::with_capacity(s.num_frames);
    for t in 0..s.num_frames {
        let mut data = background.clone();
        if let Some((d, tex, m)) = &distractor {
            paint(&mut data, w, m, d.center, tex);
        }
        let gt = s.ground_truth(t);
        if !gt.occluded {
            paint(&mut data, w, &gt.mask, s.trajectory.position(t), &object_tex);
        }
        frames.push(Frame::new(w, h, data)?);
        ground_truth.push(gt);
    }
    Ok(Sequence {
        frames,
        ground_truth,
    })
}

fn paint(data: &mut [f32], width: usize, m: &Mask, center: Point, tex: &Texture) {
    let (cx, cy) = (center.x.round() as i64, center.y.round() as i64);
    for (x, y) in m.pixels() {
        data[y * width + x] = stretch(tex.at(x as i64 - cx, y as i64 - cy), 1.0);
    }
}

/// Names accepted by [`scenario_by_name`].
pub const SUITE: [&str; 7] = [
    "linear",
    "occlusion",
    "reappear-far",
    "sinusoidal",
    "distractor",
    "occlusion-fast",
    "occlusion-distractor",
];

/// Scenarios containing scripted occlusions.
pub const OCCLUSION_SUITE: [&str; 4] = [
    "occlusion",
    "reappear-far",
    "occlusion-fast",
    "occlusion-distractor",
];

const WIDTH: usize = 128;
const HEIGHT: usize = 96;

fn base(name: &str, shape: Shape, trajectory: Trajectory, num_frames: usize) -> Scenario {
    Scenario {
        name: name.to_string(),
        width: WIDTH,
        height: HEIGHT,
        num_frames,
        object: ObjectSpec {
            shape,
            texture_seed: 11,
        },
        trajectory,
        occlusions: Vec::new(),
        background: Background {
            texture_seed: 23,
            contrast: 0.6,
        },
        distractor: None,
        seed: 0,
    }
}

fn constant(x: f64, y: f64, vx: f64, vy: f64) -> Trajectory {
    Trajectory::ConstantVelocity {
        start: Point::new(x, y),
        velocity: Point::new(vx, vy),
    }
}

/// Look up one of the built-in scenarios.
pub fn scenario_by_name(name: &str) -> Result<Scenario> {
    let rect = |side: f64| Shape::Rect {
        width: side,
        height: side,
    };
    let s = match name {
        "linear" => base("linear", rect(20.0), constant(16.0, 24.0, 2.0, 1.0), 40),
        "occlusion" => Scenario {
            occlusions: vec![[16, 20]],
            ..base(
                "occlusion",
                Shape::Disc { radius: 10.0 },
                constant(16.0, 30.0, 2.0, 1.0),
                40,
            )
        },
        "reappear-far" => Scenario {
            occlusions: vec![[14, 20]],
            ..base("reappear-far", rect(16.0), constant(14.0, 40.0, 3.0, 0.0), 34)
        },
        "sinusoidal" => base(
            "sinusoidal",
            Shape::Disc { radius: 9.0 },
            Trajectory::Sinusoidal {
                start: Point::new(16.0, 48.0),
                base_velocity: Point::new(2.0, 0.0),
                amplitude: Point::new(0.0, 20.0),
                period: 20.0,
            },
            40,
        ),
        "distractor" => Scenario {
            distractor: Some(Distractor {
                shape: rect(16.0),
                center: Point::new(64.0, 58.0),
                texture_seed: 11,
            }),
            ..base("distractor", rect(16.0), constant(14.0, 40.0, 2.0, 0.0), 40)
        },
        "occlusion-fast" => Scenario {
            occlusions: vec![[12, 13]],
            ..base("occlusion-fast", rect(16.0), constant(12.0, 30.0, 4.0, 1.0), 24)
        },
        // a look-alike parked just above the path, one row clear of it
        "occlusion-distractor" => Scenario {
            occlusions: vec![[8, 10]],
            distractor: Some(Distractor {
                shape: rect(14.0),
                center: Point::new(72.0, 34.0),
                texture_seed: 11,
            }),
            ..base("occlusion-distractor", rect(14.0), constant(14.0, 50.0, 2.0, 0.0), 40)
        },
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    s.validate()?;
    Ok(s)
}

/// Every built-in scenario, in [`SUITE`] order.
pub fn scenario_suite() -> Vec<Scenario> {
    SUITE
        .iter()
        .map(|n| scenario_by_name(n).expect("built-in scenarios are valid"))
        .collect()
}
