use super::PixelCoord;
use crate::error::{IspError, Result};

/// Grayscale frame, intensities in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFrame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl SyntheticFrame {
    pub fn black(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(IspError::Image(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(IspError::Image("intensities must lie in [0, 1]".into()));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, v: f64) {
        self.data[row * self.width + col] = v.clamp(0.0, 1.0);
    }

    /// Centre-origin pixel coordinate of a raw (col, row) position.
    pub fn to_pixel_coord(&self, c: &Centroid) -> PixelCoord {
        PixelCoord {
            u: c.col - (self.width as f64 - 1.0) / 2.0,
            v: c.row - (self.height as f64 - 1.0) / 2.0,
        }
    }
}

/// Centroid in raw image coordinates (column, row of pixel centres).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub col: f64,
    pub row: f64,
}

/// Adds an anti-aliased uniform disk centred at raw `(col, row)`. Edge pixels
/// receive their covered fraction, estimated on an `n x n` sub-grid.
pub fn render_disk(frame: &mut SyntheticFrame, col: f64, row: f64, radius: f64, intensity: f64) {
    const N: usize = 8;
    let r2 = radius * radius;
    let c0 = ((col - radius - 1.0).floor().max(0.0)) as usize;
    let c1 = ((col + radius + 1.0).ceil().max(0.0) as usize).min(frame.width.saturating_sub(1));
    let r0 = ((row - radius - 1.0).floor().max(0.0)) as usize;
    let r1 = ((row + radius + 1.0).ceil().max(0.0) as usize).min(frame.height.saturating_sub(1));
    if frame.width == 0 || frame.height == 0 || c0 > c1 || r0 > r1 {
        return;
    }
    for pr in r0..=r1 {
        for pc in c0..=c1 {
            let mut hits = 0usize;
            for sy in 0..N {
                for sx in 0..N {
                    let x = pc as f64 - 0.5 + (sx as f64 + 0.5) / N as f64 - col;
                    let y = pr as f64 - 0.5 + (sy as f64 + 0.5) / N as f64 - row;
                    if x * x + y * y <= r2 {
                        hits += 1;
                    }
                }
            }
            if hits > 0 {
                let cover = hits as f64 / (N * N) as f64;
                let v = frame.get(pc, pr) + cover * intensity;
                frame.set(pc, pr, v);
            }
        }
    }
}

struct Component {
    area: usize,
    top: usize,
    left: usize,
    sum_w: f64,
    sum_c: f64,
    sum_r: f64,
}

/// Intensity-weighted centroid of the largest 4-connected blob above
/// `threshold`. Equal-area blobs are ordered by the top-left corner of their
/// bounding box (top row first, then left column) and the first one wins.
pub fn detect_centroid_raw(frame: &SyntheticFrame, threshold: f64) -> Option<Centroid> {
    let (w, h) = (frame.width, frame.height);
    let mut visited = vec![false; w * h];
    let mut best: Option<Component> = None;
    let mut stack = Vec::new();

    for start in 0..w * h {
        if visited[start] || frame.data[start] <= threshold {
            continue;
        }
        visited[start] = true;
        stack.push(start);
        let mut comp = Component {
            area: 0,
            top: usize::MAX,
            left: usize::MAX,
            sum_w: 0.0,
            sum_c: 0.0,
            sum_r: 0.0,
        };
        while let Some(idx) = stack.pop() {
            let (c, r) = (idx % w, idx / w);
            let v = frame.data[idx];
            comp.area += 1;
            comp.top = comp.top.min(r);
            comp.left = comp.left.min(c);
            comp.sum_w += v;
            comp.sum_c += v * c as f64;
            comp.sum_r += v * r as f64;
            let mut visit = |n: usize| {
                if !visited[n] && frame.data[n] > threshold {
                    visited[n] = true;
                    stack.push(n);
                }
            };
            if c > 0 {
                visit(idx - 1);
            }
            if c + 1 < w {
                visit(idx + 1);
            }
            if r > 0 {
                visit(idx - w);
            }
            if r + 1 < h {
                visit(idx + w);
            }
        }
        let better = match &best {
            None => true,
            Some(b) => {
                comp.area > b.area || (comp.area == b.area && (comp.top, comp.left) < (b.top, b.left))
            }
        };
        if better {
            best = Some(comp);
        }
    }

    best.map(|b| Centroid {
        col: b.sum_c / b.sum_w,
        row: b.sum_r / b.sum_w,
    })
}

/// Centroid of the largest blob in centre-origin pixel coordinates, or `None`
/// when nothing exceeds the threshold.
pub fn detect_centroid(frame: &SyntheticFrame, threshold: f64) -> Option<PixelCoord> {
    detect_centroid_raw(frame, threshold).map(|c| frame.to_pixel_coord(&c))
}
