//! Binary masks, probability maps and the small amount of planar geometry
//! everything else is built on.
//!
//! Pixel `(x, y)` has its center at integer coordinates `(x, y)`; `x` grows to
//! the right and `y` grows downwards. Grids are stored row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    Ok(())
}

/// A sub-pixel location in image coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Nearest pixel, or `None` when the rounded location is outside the grid.
    pub fn to_pixel(&self, width: usize, height: usize) -> Option<(usize, usize)> {
        let x = self.x.round();
        let y = self.y.round();
        if x < 0.0 || y < 0.0 || x >= width as f64 || y >= height as f64 {
            return None;
        }
        Some((x as usize, y as usize))
    }
}

/// Inclusive axis-aligned pixel box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BBox {
    pub fn new(x_min: usize, y_min: usize, x_max: usize, y_max: usize) -> Self {
        debug_assert!(x_min <= x_max && y_min <= y_max);
        BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> usize {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> usize {
        self.y_max - self.y_min + 1
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(
            (self.x_min + self.x_max) as f64 / 2.0,
            (self.y_min + self.y_max) as f64 / 2.0,
        )
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    /// Clamp the box to a `width` x `height` frame.
    pub fn clip(&self, width: usize, height: usize) -> BBox {
        let x_max = self.x_max.min(width - 1);
        let y_max = self.y_max.min(height - 1);
        BBox::new(self.x_min.min(x_max), self.y_min.min(y_max), x_max, y_max)
    }

    /// Pixel-count IoU of two inclusive boxes.
    pub fn iou(&self, other: &BBox) -> f64 {
        let ix0 = self.x_min.max(other.x_min);
        let iy0 = self.y_min.max(other.y_min);
        let ix1 = self.x_max.min(other.x_max);
        let iy1 = self.y_max.min(other.y_max);
        let inter = if ix0 <= ix1 && iy0 <= iy1 {
            (ix1 - ix0 + 1) * (iy1 - iy0 + 1)
        } else {
            0
        };
        let union = self.area() + other.area() - inter;
        inter as f64 / union as f64
    }
}

/// Binary object region, `true` = foreground.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl Mask {
    /// All-background mask.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Mask {
            width,
            height,
            cells: vec![false; width * height],
        })
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if cells.len() != width * height {
            return Err(Error::BufferLength {
                len: cells.len(),
                width,
                height,
            });
        }
        Ok(Mask {
            width,
            height,
            cells,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        check_dims(width, height)?;
        let cells = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Ok(Mask {
            width,
            height,
            cells,
        })
    }

    /// Mask with exactly the listed pixels set; out-of-frame pixels are dropped.
    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut m = Mask::new(width, height)?;
        for (x, y) in pixels {
            if x < width && y < height {
                m.set(x, y, true);
            }
        }
        Ok(m)
    }

    /// Axis-aligned filled rectangle, inclusive corners, clipped to the frame.
    pub fn rect(width: usize, height: usize, b: BBox) -> Result<Self> {
        Mask::from_fn(width, height, |x, y| b.contains(x, y))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[y * self.width + x]
    }

    /// Bounds-checked lookup; anything outside the frame is background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.get(x as usize, y as usize)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.cells[y * self.width + x] = value;
    }

    pub fn area(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(move |(i, _)| (i % w, i / w))
    }

    pub fn ensure_same_dims(&self, width: usize, height: usize) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::DimensionMismatch {
                expected_width: width,
                expected_height: height,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    /// Shift by an integer offset; pixels leaving the frame are dropped.
    pub fn translate(&self, dx: i64, dy: i64) -> Mask {
        let mut out = Mask {
            width: self.width,
            height: self.height,
            cells: vec![false; self.cells.len()],
        };
        for (x, y) in self.pixels() {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height {
                out.set(nx as usize, ny as usize, true);
            }
        }
        out
    }

    pub fn union(&self, other: &Mask) -> Result<Mask> {
        other.ensure_same_dims(self.width, self.height)?;
        Ok(Mask {
            width: self.width,
            height: self.height,
            cells: self
                .cells
                .iter()
                .zip(&other.cells)
                .map(|(&a, &b)| a || b)
                .collect(),
        })
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.dims() == other.dims() && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }
}

/// Per-pixel foreground confidence in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl ProbMap {
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(ProbMap {
            width,
            height,
            values: vec![0.0; width * height],
        })
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::BufferLength {
                len: values.len(),
                width,
                height,
            });
        }
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange {
                what: "probability map",
                value: bad as f64,
            });
        }
        Ok(ProbMap {
            width,
            height,
            values,
        })
    }

    /// `inside` on foreground pixels, `outside` elsewhere.
    pub fn from_mask(mask: &Mask, inside: f32, outside: f32) -> Self {
        ProbMap {
            width: mask.width,
            height: mask.height,
            values: mask
                .cells
                .iter()
                .map(|&c| if c { inside } else { outside })
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Pixels strictly above `threshold`.
    pub fn threshold(&self, threshold: f32) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            cells: self.values.iter().map(|&v| v > threshold).collect(),
        }
    }

    pub(crate) fn map(&self, f: impl Fn(f32) -> f32) -> ProbMap {
        ProbMap {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Intersection over union. Two empty masks agree perfectly (1.0).
pub fn iou(a: &Mask, b: &Mask) -> Result<f64> {
    b.ensure_same_dims(a.width, a.height)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.cells.iter().zip(&b.cells) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Mean of the foreground pixel centers.
pub fn centroid(m: &Mask) -> Result<Point> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (x, y) in m.pixels() {
        sx += x as f64;
        sy += y as f64;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMask("centroid"));
    }
    Ok(Point::new(sx / n as f64, sy / n as f64))
}

/// Tight box around the foreground.
pub fn bounding_box(m: &Mask) -> Result<BBox> {
    let mut it = m.pixels();
    let (x0, y0) = it.next().ok_or(Error::EmptyMask("bounding box"))?;
    let mut b = BBox::new(x0, y0, x0, y0);
    for (x, y) in it {
        b.x_min = b.x_min.min(x);
        b.x_max = b.x_max.max(x);
        b.y_min = b.y_min.min(y);
        b.y_max = b.y_max.max(y);
    }
    Ok(b)
}

const NEIGHBORS4: [(i64, i64); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

/// Foreground pixels with at least one 4-neighbor that is background or
/// outside the frame.
pub fn boundary(m: &Mask) -> Mask {
    let mut out = Mask {
        width: m.width,
        height: m.height,
        cells: vec![false; m.cells.len()],
    };
    for (x, y) in m.pixels() {
        let edge = NEIGHBORS4
            .iter()
            .any(|&(dx, dy)| !m.get_signed(x as i64 + dx, y as i64 + dy));
        if edge {
            out.set(x, y, true);
        }
    }
    out
}

/// [`boundary`] as a coordinate list in row-major order.
pub fn boundary_pixels(m: &Mask) -> Vec<(usize, usize)> {
    boundary(m).pixels().collect()
}

/// Offsets of the closed Euclidean disc of the given radius.
fn disc_offsets(radius: f64) -> Vec<(i64, i64)> {
    let r = radius.max(0.0);
    let reach = r.floor() as i64;
    let r2 = r * r;
    let mut out = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if ((dx * dx + dy * dy) as f64) <= r2 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Union of closed Euclidean discs of `radius` around every set pixel,
/// clipped to the frame.
pub fn dilate(m: &Mask, radius: f64) -> Mask {
    let offsets = disc_offsets(radius);
    let mut out = m.clone();
    for (x, y) in m.pixels() {
        for &(dx, dy) in &offsets {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx >= 0 && ny >= 0 && (nx as usize) < m.width && (ny as usize) < m.height {
                out.set(nx as usize, ny as usize, true);
            }
        }
    }
    out
}

/// Pixels whose whole disc neighborhood is foreground. Neighbors outside the
/// frame are ignored, so objects touching the border do not erode from it.
pub fn erode(m: &Mask, radius: f64) -> Mask {
    let offsets = disc_offsets(radius);
    Mask::from_fn(m.width, m.height, |x, y| {
        m.get(x, y)
            && offsets.iter().all(|&(dx, dy)| {
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if nx < 0 || ny < 0 || nx as usize >= m.width || ny as usize >= m.height {
                    return true;
                }
                m.get(nx as usize, ny as usize)
            })
    })
    .expect("dimensions already validated")
}

/// Morphological closing: dilate then erode with the same disc. Runs on a
/// canvas padded past the dilation reach so the frame edge neither adds nor
/// removes pixels.
pub fn close(m: &Mask, radius: f64) -> Mask {
    let pad = radius.max(0.0).ceil() as usize + 1;
    let (pw, ph) = (m.width + 2 * pad, m.height + 2 * pad);
    let padded = Mask::from_pixels(pw, ph, m.pixels().map(|(x, y)| (x + pad, y + pad)))
        .expect("padded dimensions are nonzero");
    let closed = erode(&dilate(&padded, radius), radius);
    Mask::from_fn(m.width, m.height, |x, y| closed.get(x + pad, y + pad)).expect("dimensions already validated")
}
