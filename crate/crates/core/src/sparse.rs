//! Keypoint-based motion: a centroid plus points along the four cardinal rays,
//! tracked between frames and extrapolated at constant velocity into
//! positive point prompts.

use std::collections::VecDeque;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::{bounding_box, centroid, Mask, Point};

pub const DEFAULT_KEYPOINT_COUNT: usize = 5;
pub const DEFAULT_HISTORY_CAPACITY: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    Up,
    Down,
    Left,
    Right,
}

const DIRECTIONS: [Direction; 4] = [
    Direction::Up,
    Direction::Down,
    Direction::Left,
    Direction::Right,
];

/// Keypoints of one frame in fixed order: centroid, then up, down, left,
/// right midpoints, then quarter points (see [`extract_keypoints`]).
#[derive(Clone, Debug, PartialEq)]
pub struct KeyPointSet {
    pub points: Vec<Point>,
    pub frame_index: usize,
    /// Rays were measured to the bounding box because the centroid fell
    /// outside the mask.
    pub bbox_fallback: bool,
}

impl KeyPointSet {
    pub fn centroid(&self) -> Point {
        self.points[0]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn validate_count(count: usize) -> Result<()> {
    if count.is_multiple_of(2) || !(1..=13).contains(&count) {
        return Err(Error::KeypointCount(count));
    }
    Ok(())
}

/// Extract `count` keypoints from a mask.
///
/// Point 0 is the centroid. From the centroid's pixel each cardinal ray is
/// walked to the last contiguous foreground pixel; the directional keypoint
/// sits halfway along that ray. Counts 3 and 5 add the up/down pair and then
/// the left/right pair. Counts above 5 add points at 1/4 of each ray (in
/// up, down, left, right order) and then at 3/4.
///
/// If the centroid pixel is background (concave shapes) the rays end at the
/// bounding-box edges instead and `bbox_fallback` is set.
pub fn extract_keypoints(m: &Mask, count: usize, frame_index: usize) -> Result<KeyPointSet> {
    validate_count(count)?;
    let c = centroid(m)?;
    let (cx, cy) = (c.x.round() as i64, c.y.round() as i64);
    let inside = m.get_signed(cx, cy);

    // ray end coordinate along the moving axis
    let ends: Vec<f64> = if inside {
        DIRECTIONS
            .iter()
            .map(|&d| {
                let (dx, dy) = match d {
                    Direction::Up => (0, -1),
                    Direction::Down => (0, 1),
                    Direction::Left => (-1, 0),
                    Direction::Right => (1, 0),
                };
                let (mut x, mut y) = (cx, cy);
                while m.get_signed(x + dx, y + dy) {
                    x += dx;
                    y += dy;
                }
                match d {
                    Direction::Up | Direction::Down => y as f64,
                    Direction::Left | Direction::Right => x as f64,
                }
            })
            .collect()
    } else {
        let b = bounding_box(m)?;
        vec![
            b.y_min as f64,
            b.y_max as f64,
            b.x_min as f64,
            b.x_max as f64,
        ]
    };

    let along = |dir: usize, fraction: f64| -> Point {
        match DIRECTIONS[dir] {
            Direction::Up | Direction::Down => Point::new(c.x, c.y + fraction * (ends[dir] - c.y)),
            Direction::Left | Direction::Right => {
                Point::new(c.x + fraction * (ends[dir] - c.x), c.y)
            }
        }
    };

    let mut points = Vec::with_capacity(count);
    points.push(c);
    let order = (0..4)
        .map(|d| (d, 0.5))
        .chain((0..4).map(|d| (d, 0.25)))
        .chain((0..4).map(|d| (d, 0.75)));
    for (dir, fraction) in order.take(count - 1) {
        points.push(along(dir, fraction));
    }

    Ok(KeyPointSet {
        points,
        frame_index,
        bbox_fallback: !inside,
    })
}

/// Bounded queue of recent keypoint sets, oldest first.
#[derive(Clone, Debug)]
pub struct MotionHistory {
    recent: VecDeque<KeyPointSet>,
    capacity: usize,
}

impl Default for MotionHistory {
    fn default() -> Self {
        MotionHistory::new(DEFAULT_HISTORY_CAPACITY)
    }
}

impl MotionHistory {
    pub fn new(capacity: usize) -> Self {
        MotionHistory {
            recent: VecDeque::with_capacity(capacity),
            capacity: capacity.max(2),
        }
    }

    /// Append a newer observation, evicting the oldest when full.
    pub fn push(&mut self, kp: KeyPointSet) -> Result<()> {
        if let Some(last) = self.recent.back() {
            if kp.frame_index <= last.frame_index {
                return Err(Error::NonIncreasingFrame {
                    last: last.frame_index,
                    next: kp.frame_index,
                });
            }
            if kp.len() != last.len() {
                return Err(Error::KeypointMismatch(last.len(), kp.len()));
            }
        }
        if self.recent.len() == self.capacity {
            self.recent.pop_front();
        }
        self.recent.push_back(kp);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.recent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty()
    }

    pub fn latest(&self) -> Option<&KeyPointSet> {
        self.recent.back()
    }

    pub fn iter(&self) -> impl Iterator<Item = &KeyPointSet> {
        self.recent.iter()
    }
}

/// Constant-velocity prediction `horizon` frames past the newest entry,
/// using the two most recent observations.
pub fn extrapolate_keypoints(history: &MotionHistory, horizon: usize) -> Result<KeyPointSet> {
    let n = history.len();
    if n < 2 {
        return Err(Error::InsufficientHistory(n));
    }
    let prev = &history.recent[n - 2];
    let last = &history.recent[n - 1];
    let gap = (last.frame_index - prev.frame_index) as f64;
    let h = horizon as f64;
    let points = prev
        .points
        .iter()
        .zip(&last.points)
        .map(|(p, q)| {
            let vx = (q.x - p.x) / gap;
            let vy = (q.y - p.y) / gap;
            Point::new(q.x + vx * h, q.y + vy * h)
        })
        .collect();
    Ok(KeyPointSet {
        points,
        frame_index: last.frame_index + horizon,
        bbox_fallback: last.bbox_fallback,
    })
}

/// Clamp keypoints into the frame; every point becomes a positive prompt.
pub fn keypoints_to_point_prompts(kp: &KeyPointSet, width: usize, height: usize) -> Vec<Point> {
    let max_x = (width - 1) as f64;
    let max_y = (height - 1) as f64;
    kp.points
        .iter()
        .map(|p| Point::new(p.x.clamp(0.0, max_x), p.y.clamp(0.0, max_y)))
        .collect()
}

#[derive(Serialize)]
struct TraceRow {
    frame_index: usize,
    point_index: usize,
    x: f64,
    y: f64,
}

/// Dump keypoint sets as `frame_index,point_index,x,y` CSV.
pub fn write_keypoint_trace<W: Write>(writer: W, sets: &[KeyPointSet]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for set in sets {
        for (i, p) in set.points.iter().enumerate() {
            w.serialize(TraceRow {
                frame_index: set.frame_index,
                point_index: i,
                x: p.x,
                y: p.y,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("keypoint trace", e))?;
    Ok(())
}
