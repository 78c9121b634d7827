//! Dense motion: pyramidal Lucas-Kanade flow, flow masked by the current
//! prediction, forward warping of the mask and the resulting box prompt.

use crate::error::{Error, Result};
use crate::frame::{Frame, Plane};
use crate::mask::{bounding_box, close, BBox, Mask};

/// Per-pixel displacement over `dt` frames.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
    dt: usize,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f32>, v: Vec<f32>, dt: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        for buf in [&u, &v] {
            if buf.len() != width * height {
                return Err(Error::BufferLength {
                    len: buf.len(),
                    width,
                    height,
                });
            }
            if let Some(bad) = buf.iter().find(|x| !x.is_finite()) {
                return Err(Error::OutOfRange {
                    what: "flow component",
                    value: *bad as f64,
                });
            }
        }
        if dt == 0 {
            return Err(Error::InvalidConfig("flow dt must be at least 1".into()));
        }
        Ok(FlowField {
            width,
            height,
            u,
            v,
            dt,
        })
    }

    /// Constant displacement everywhere.
    pub fn uniform(width: usize, height: usize, u: f32, v: f32, dt: usize) -> Result<Self> {
        FlowField::new(width, height, vec![u; width * height], vec![v; width * height], dt)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dt(&self) -> usize {
        self.dt
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    /// Flip the sign of every vector.
    pub fn negated(&self) -> FlowField {
        FlowField {
            width: self.width,
            height: self.height,
            u: self.u.iter().map(|x| -x).collect(),
            v: self.v.iter().map(|x| -x).collect(),
            dt: self.dt,
        }
    }

    pub fn with_dt(mut self, dt: usize) -> Result<Self> {
        if dt == 0 {
            return Err(Error::InvalidConfig("flow dt must be at least 1".into()));
        }
        self.dt = dt;
        Ok(self)
    }

    /// Mean `(u, v)` over a pixel region.
    pub fn mean_over(&self, m: &Mask) -> Option<(f32, f32)> {
        let (mut su, mut sv, mut n) = (0.0f64, 0.0f64, 0usize);
        for (x, y) in m.pixels() {
            let (u, v) = self.at(x, y);
            su += u as f64;
            sv += v as f64;
            n += 1;
        }
        (n > 0).then(|| ((su / n as f64) as f32, (sv / n as f64) as f32))
    }
}

/// Anything that produces a dense flow field mapping `prev` onto `cur`.
pub trait FlowEstimator: Send + Sync {
    fn estimate(&self, prev: &Frame, cur: &Frame) -> Result<FlowField>;
}

/// Dense pyramidal Lucas-Kanade.
#[derive(Clone, Debug)]
pub struct LucasKanade {
    pub levels: usize,
    /// Half-width of the square integration window.
    pub window_radius: usize,
    pub iterations: usize,
    /// Windows whose structure tensor has a smaller eigenvalue below this get
    /// no update.
    pub min_eigenvalue: f32,
}

impl Default for LucasKanade {
    fn default() -> Self {
        LucasKanade {
            levels: 3,
            window_radius: 2,
            iterations: 3,
            min_eigenvalue: 1e-6,
        }
    }
}

impl LucasKanade {
    fn gradients(p: &Plane) -> (Plane, Plane) {
        let mut gx = Plane::zeros(p.width, p.height);
        let mut gy = Plane::zeros(p.width, p.height);
        for y in 0..p.height {
            for x in 0..p.width {
                let (xi, yi) = (x as i64, y as i64);
                let i = y * p.width + x;
                gx.data[i] = 0.5 * (p.clamped(xi + 1, yi) - p.clamped(xi - 1, yi));
                gy.data[i] = 0.5 * (p.clamped(xi, yi + 1) - p.clamped(xi, yi - 1));
            }
        }
        (gx, gy)
    }

    fn refine_level(&self, prev: &Plane, cur: &Plane, u: &mut Plane, v: &mut Plane) {
        let (w, h) = (prev.width, prev.height);
        let (gx, gy) = Self::gradients(prev);
        let mut ixx = Plane::zeros(w, h);
        let mut ixy = Plane::zeros(w, h);
        let mut iyy = Plane::zeros(w, h);
        for i in 0..w * h {
            ixx.data[i] = gx.data[i] * gx.data[i];
            ixy.data[i] = gx.data[i] * gy.data[i];
            iyy.data[i] = gy.data[i] * gy.data[i];
        }
        let r = self.window_radius;
        let sxx = ixx.box_sum(r);
        let sxy = ixy.box_sum(r);
        let syy = iyy.box_sum(r);
        let step_limit = r.max(1) as f32;

        for _ in 0..self.iterations {
            // each window moves rigidly with the flow at its center pixel
            let mut sxt = Plane::zeros(w, h);
            let mut syt = Plane::zeros(w, h);
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    // the bilinear weights are shared by the whole window
                    let (fu, fv) = (u.data[i].floor(), v.data[i].floor());
                    let (au, av) = (u.data[i] - fu, v.data[i] - fv);
                    let (ou, ov) = (fu as i64, fv as i64);
                    let (mut bx, mut by) = (0.0f32, 0.0f32);
                    for wy in y.saturating_sub(r)..(y + r + 1).min(h) {
                        let sy = wy as i64 + ov;
                        for wx in x.saturating_sub(r)..(x + r + 1).min(w) {
                            let j = wy * w + wx;
                            let sx = wx as i64 + ou;
                            let top = (1.0 - au) * cur.clamped(sx, sy) + au * cur.clamped(sx + 1, sy);
                            let bottom = (1.0 - au) * cur.clamped(sx, sy + 1) + au * cur.clamped(sx + 1, sy + 1);
                            let it = (1.0 - av) * top + av * bottom - prev.data[j];
                            bx += gx.data[j] * it;
                            by += gy.data[j] * it;
                        }
                    }
                    sxt.data[i] = bx;
                    syt.data[i] = by;
                }
            }
            for i in 0..w * h {
                let (a, b, c) = (sxx.data[i], sxy.data[i], syy.data[i]);
                let half_trace = 0.5 * (a + c);
                let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                if half_trace - disc < self.min_eigenvalue {
                    continue;
                }
                let det = a * c - b * b;
                let bx = -sxt.data[i];
                let by = -syt.data[i];
                let du = (c * bx - b * by) / det;
                let dv = (a * by - b * bx) / det;
                if du.is_finite() && dv.is_finite() {
                    u.data[i] += du.clamp(-step_limit, step_limit);
                    v.data[i] += dv.clamp(-step_limit, step_limit);
                }
            }
        }
    }

    /// Upsample a coarse flow component onto a finer grid, doubling magnitudes.
    fn upsample(coarse: &Plane, width: usize, height: usize) -> Plane {
        let mut out = Plane::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                let cx = (x as f32 - 0.5) / 2.0;
                let cy = (y as f32 - 0.5) / 2.0;
                out.data[y * width + x] = 2.0 * coarse.bilinear(cx, cy);
            }
        }
        out
    }
}

impl FlowEstimator for LucasKanade {
    fn estimate(&self, prev: &Frame, cur: &Frame) -> Result<FlowField> {
        cur.ensure_same_dims(prev.width(), prev.height())?;
        let mut prev_pyr = vec![Plane::from_frame(prev)];
        let mut cur_pyr = vec![Plane::from_frame(cur)];
        for _ in 1..self.levels.max(1) {
            let last = prev_pyr.last().unwrap();
            if last.width < 2 * (2 * self.window_radius + 1) || last.height < 2 * (2 * self.window_radius + 1) {
                break;
            }
            let p = last.downsample();
            let c = cur_pyr.last().unwrap().downsample();
            prev_pyr.push(p);
            cur_pyr.push(c);
        }

        let coarsest = prev_pyr.last().unwrap();
        let mut u = Plane::zeros(coarsest.width, coarsest.height);
        let mut v = Plane::zeros(coarsest.width, coarsest.height);
        for level in (0..prev_pyr.len()).rev() {
            let (p, c) = (&prev_pyr[level], &cur_pyr[level]);
            if u.width != p.width || u.height != p.height {
                u = Self::upsample(&u, p.width, p.height);
                v = Self::upsample(&v, p.width, p.height);
            }
            self.refine_level(p, c, &mut u, &mut v);
        }
        FlowField::new(prev.width(), prev.height(), u.data, v.data, 1)
    }
}

/// Pyramidal Lucas-Kanade with default parameters.
pub fn estimate_flow(prev: &Frame, cur: &Frame) -> Result<FlowField> {
    LucasKanade::default().estimate(prev, cur)
}

/// Zero the flow outside `m` and report the mean over `m`.
pub fn masked_flow(flow: &FlowField, m: &Mask) -> Result<(FlowField, (f32, f32))> {
    m.ensure_same_dims(flow.width, flow.height)?;
    let mean = flow
        .mean_over(m)
        .ok_or(Error::EmptyMask("masked flow"))?;
    let keep = |buf: &[f32]| -> Vec<f32> {
        buf.iter()
            .zip(m.cells())
            .map(|(&x, &inside)| if inside { x } else { 0.0 })
            .collect()
    };
    let masked = FlowField {
        width: flow.width,
        height: flow.height,
        u: keep(&flow.u),
        v: keep(&flow.v),
        dt: flow.dt,
    };
    Ok((masked, mean))
}

/// Splat every foreground pixel along its per-step displacement times
/// `horizon`, then close radius-1 holes.
pub fn warp_mask_forward(m: &Mask, flow: &FlowField, horizon: usize) -> Result<Mask> {
    m.ensure_same_dims(flow.width, flow.height)?;
    if m.is_empty() {
        return Err(Error::EmptyMask("warp input"));
    }
    let scale = horizon as f32 / flow.dt as f32;
    let mut out = Mask::new(m.width(), m.height())?;
    for (x, y) in m.pixels() {
        let (u, v) = flow.at(x, y);
        let nx = (x as f32 + u * scale).round();
        let ny = (y as f32 + v * scale).round();
        if nx >= 0.0 && ny >= 0.0 && (nx as usize) < m.width() && (ny as usize) < m.height() {
            out.set(nx as usize, ny as usize, true);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyMask("warped mask left the frame"));
    }
    Ok(close(&out, 1.0))
}

/// Bounding box of the warped mask, clipped to the frame.
pub fn flow_box_prompt(warped: &Mask) -> Result<BBox> {
    Ok(bounding_box(warped)?.clip(warped.width(), warped.height()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn texture(w: usize, h: usize, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f32> = (0..w * h).map(|_| rng.gen::<f32>()).collect();
        // 3x3 periodic box smoothing
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut s = 0.0;
                for dy in [h - 1, 0, 1] {
                    for dx in [w - 1, 0, 1] {
                        s += raw[((y + dy) % h) * w + (x + dx) % w];
                    }
                }
                out[y * w + x] = s / 9.0;
            }
        }
        out
    }

    fn shifted(base: &[f32], w: usize, h: usize, dx: i64, dy: i64) -> Frame {
        Frame::from_fn(w, h, |x, y| {
            let sx = (x as i64 - dx).rem_euclid(w as i64) as usize;
            let sy = (y as i64 - dy).rem_euclid(h as i64) as usize;
            base[sy * w + sx]
        })
        .unwrap()
    }

    fn central_mean(flow: &FlowField) -> (f32, f32) {
        let (w, h) = (flow.width(), flow.height());
        let m = Mask::from_fn(w, h, |x, y| {
            x >= w / 4 && x < 3 * w / 4 && y >= h / 4 && y < 3 * h / 4
        })
        .unwrap();
        flow.mean_over(&m).unwrap()
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let t = texture(48, 40, 1);
        let f = Frame::new(48, 40, t).unwrap();
        let flow = estimate_flow(&f, &f).unwrap();
        assert!(flow.u().iter().chain(flow.v()).all(|&x| x == 0.0));
    }

    #[test]
    fn flat_frames_are_degenerate() {
        let a = Frame::filled(32, 32, 0.4).unwrap();
        let b = Frame::filled(32, 32, 0.7).unwrap();
        let flow = estimate_flow(&a, &b).unwrap();
        assert!(flow.u().iter().chain(flow.v()).all(|&x| x == 0.0));
    }

    #[test]
    fn recovers_integer_shift() {
        let (w, h) = (64, 64);
        let base = texture(w, h, 7);
        let a = shifted(&base, w, h, 0, 0);
        let b = shifted(&base, w, h, 3, 0);
        let (mu, mv) = central_mean(&estimate_flow(&a, &b).unwrap());
        assert!((mu - 3.0).abs() <= 0.5, "u = {mu}");
        assert!(mv.abs() <= 0.5, "v = {mv}");
    }

    #[test]
    fn dimension_mismatch() {
        let a = Frame::filled(8, 8, 0.0).unwrap();
        let b = Frame::filled(8, 9, 0.0).unwrap();
        assert!(estimate_flow(&a, &b).is_err());
    }

    #[test]
    fn flow_stays_finite_on_noise() {
        let (w, h) = (40, 40);
        let a = Frame::new(w, h, texture(w, h, 3)).unwrap();
        let b = Frame::new(w, h, texture(w, h, 4)).unwrap();
        let flow = estimate_flow(&a, &b).unwrap();
        assert!(flow.u().iter().chain(flow.v()).all(|x| x.is_finite() && x.abs() < 50.0));
    }

    #[test]
    fn masked_flow_examples() {
        let full = Mask::from_fn(10, 10, |_, _| true).unwrap();
        let flow = FlowField::uniform(10, 10, 2.0, 1.0, 1).unwrap();
        assert_eq!(masked_flow(&flow, &full).unwrap().1, (2.0, 1.0));

        let half = Mask::from_fn(10, 10, |x, _| x < 5).unwrap();
        let (masked, mean) = masked_flow(&flow, &half).unwrap();
        assert_eq!(mean, (2.0, 1.0));
        assert_eq!(masked.at(7, 3), (0.0, 0.0));
        assert_eq!(masked.at(2, 3), (2.0, 1.0));

        let u: Vec<f32> = (0..100).map(|i| if i % 10 < 5 { 4.0 } else { -4.0 }).collect();
        let flow = FlowField::new(10, 10, u, vec![0.0; 100], 1).unwrap();
        assert_eq!(masked_flow(&flow, &half).unwrap().1, (4.0, 0.0));

        assert!(masked_flow(&flow, &Mask::new(10, 10).unwrap()).is_err());
    }

    #[test]
    fn warp_examples() {
        let sq = Mask::rect(30, 30, BBox::new(8, 8, 15, 15)).unwrap();
        let zero = FlowField::uniform(30, 30, 0.0, 0.0, 1).unwrap();
        assert_eq!(warp_mask_forward(&sq, &zero, 1).unwrap(), sq);

        let right3 = FlowField::uniform(30, 30, 3.0, 0.0, 1).unwrap();
        assert_eq!(warp_mask_forward(&sq, &right3, 1).unwrap(), sq.translate(3, 0));

        // 2 px over 2 frames is 1 px per step
        let slow = FlowField::uniform(30, 30, 2.0, 0.0, 2).unwrap();
        assert_eq!(warp_mask_forward(&sq, &slow, 1).unwrap(), sq.translate(1, 0));

        let away = FlowField::uniform(30, 30, 100.0, 0.0, 1).unwrap();
        assert!(warp_mask_forward(&sq, &away, 1).is_err());
    }

    #[test]
    fn box_prompt_examples() {
        let sq = Mask::rect(30, 30, BBox::new(8, 5, 18, 15)).unwrap();
        assert_eq!(flow_box_prompt(&sq).unwrap(), BBox::new(8, 5, 18, 15));
        let edge = Mask::rect(20, 20, BBox::new(15, 5, 25, 10)).unwrap();
        assert_eq!(flow_box_prompt(&edge).unwrap().x_max, 19);
        let dot = Mask::from_pixels(10, 10, [(2, 2)]).unwrap();
        assert_eq!(flow_box_prompt(&dot).unwrap(), BBox::new(2, 2, 2, 2));
    }
}
