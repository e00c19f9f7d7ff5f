//! Circular local binary patterns with bilinear sampling.
//!
//! Neighbour `p` of `P` sits at angle `2πp/P` on a circle of radius `R`,
//! measured counter-clockwise from the +u axis. Because rows grow downwards,
//! that is the offset `(R cos θ, -R sin θ)` in `(u, v)`. Offsets within 1e-9
//! of an integer are snapped onto the grid so exact hits read one pixel.
//!
//! Bit `p` is set when the sampled neighbour is at least as bright as the
//! centre. The comparison is done on the bilinear interpolation of the four
//! centre-relative differences, evaluated in lerp form:
//!
//! ```text
//! top    = d00 + fx (d10 - d00)
//! bottom = d01 + fx (d11 - d01)
//! diff   = top + fy (bottom - top)
//! ```
//!
//! so no intermediate is rounded to an integer, and adding a constant to the
//! image leaves every `d` (and therefore every code) bit-identical.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Largest supported neighbour count; codes must fit in `u16`.
pub const MAX_NEIGHBORS: u32 = 16;

const SNAP_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbpConfig {
    neighbors: u32,
    radius: f64,
}

impl LbpConfig {
    pub fn new(neighbors: u32, radius: f64) -> Result<Self> {
        if neighbors == 0 || neighbors > MAX_NEIGHBORS {
            return Err(Error::InvalidConfig(format!(
                "neighbour count {neighbors} outside 1..={MAX_NEIGHBORS}"
            )));
        }
        if !radius.is_finite() || radius < 1.0 {
            return Err(Error::InvalidConfig(format!("LBP radius {radius} must be >= 1")));
        }
        Ok(Self { neighbors, radius })
    }

    pub fn neighbors(&self) -> u32 {
        self.neighbors
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Width of the border strip on which codes are undefined: `ceil(R)`.
    pub fn margin(&self) -> u32 {
        self.radius.ceil() as u32
    }

    /// Number of distinct codes, `2^P`.
    pub fn code_count(&self) -> usize {
        1usize << self.neighbors
    }

    /// Offset of neighbour `p` relative to the centre, after grid snapping.
    pub fn neighbor_offset(&self, p: u32) -> (f64, f64) {
        let theta = std::f64::consts::TAU * f64::from(p) / f64::from(self.neighbors);
        (
            snap(self.radius * theta.cos()),
            snap(-self.radius * theta.sin()),
        )
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < SNAP_EPS {
        r
    } else {
        x
    }
}

/// Per-pixel LBP codes for one `(P, R)` configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LbpMap {
    width: u32,
    height: u32,
    neighbors: u32,
    margin: u32,
    codes: Vec<u16>,
}

impl LbpMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn neighbors(&self) -> u32 {
        self.neighbors
    }

    pub fn margin(&self) -> u32 {
        self.margin
    }

    /// Row-major codes; entries inside the margin are 0 and meaningless.
    pub fn codes(&self) -> &[u16] {
        &self.codes
    }

    #[inline]
    pub fn is_valid(&self, u: u32, v: u32) -> bool {
        let m = self.margin;
        u >= m && v >= m && u + m < self.width && v + m < self.height
    }

    #[inline]
    pub fn code(&self, u: u32, v: u32) -> Option<u16> {
        self.is_valid(u, v)
            .then(|| self.codes[v as usize * self.width as usize + u as usize])
    }

    /// Debug rendering: codes as intensities (top 8 bits when P > 8), margin
    /// pixels black.
    pub fn to_gray(&self) -> GrayImage {
        let shift = self.neighbors.saturating_sub(8);
        GrayImage::from_fn(self.width, self.height, |u, v| {
            self.code(u, v).map_or(0, |c| (c >> shift) as u8)
        })
        .expect("LbpMap dimensions are non-zero")
    }
}

struct Sample {
    off00: isize,
    off10: isize,
    off01: isize,
    off11: isize,
    fx: f64,
    fy: f64,
}

fn samples(cfg: &LbpConfig, stride: usize) -> Vec<Sample> {
    let stride = stride as isize;
    (0..cfg.neighbors)
        .map(|p| {
            let (x, y) = cfg.neighbor_offset(p);
            let (x0, y0) = (x.floor(), y.floor());
            let (fx, fy) = (x - x0, y - y0);
            let (x0, y0) = (x0 as isize, y0 as isize);
            // a zero weight must not read past the sampled pixel
            let x1 = if fx > 0.0 { x0 + 1 } else { x0 };
            let y1 = if fy > 0.0 { y0 + 1 } else { y0 };
            Sample {
                off00: y0 * stride + x0,
                off10: y0 * stride + x1,
                off01: y1 * stride + x0,
                off11: y1 * stride + x1,
                fx,
                fy,
            }
        })
        .collect()
}

/// Computes the LBP code map. Rows are processed in parallel; the result does
/// not depend on the schedule.
pub fn compute_lbp(img: &GrayImage, cfg: &LbpConfig) -> Result<LbpMap> {
    let (w, h) = img.dimensions();
    let m = cfg.margin();
    if w <= 2 * m || h <= 2 * m {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 2 * m,
        });
    }
    let stride = w as usize;
    let table = samples(cfg, stride);
    let data = img.data();
    let mut codes = vec![0u16; data.len()];

    codes
        .par_chunks_mut(stride)
        .enumerate()
        .skip(m as usize)
        .take((h - 2 * m) as usize)
        .for_each(|(v, row)| {
            let (lo, hi) = (m as usize, (w - m) as usize);
            for (u, out) in row.iter_mut().enumerate().take(hi).skip(lo) {
                let idx = (v * stride + u) as isize;
                let centre = f64::from(data[idx as usize]);
                let d = |off: isize| f64::from(data[(idx + off) as usize]) - centre;
                let mut code = 0u16;
                for (bit, s) in table.iter().enumerate() {
                    let top = d(s.off00) + s.fx * (d(s.off10) - d(s.off00));
                    let bottom = d(s.off01) + s.fx * (d(s.off11) - d(s.off01));
                    let diff = top + s.fy * (bottom - top);
                    if diff >= 0.0 {
                        code |= 1 << bit;
                    }
                }
                *out = code;
            }
        });

    Ok(LbpMap {
        width: w,
        height: h,
        neighbors: cfg.neighbors,
        margin: m,
        codes,
    })
}

/// Whether adding `offset` to every intensity leaves the code map unchanged.
pub fn lbp_shift_check(img: &GrayImage, offset: i32, cfg: &LbpConfig) -> Result<bool> {
    let shifted = img.offset(offset)?;
    Ok(compute_lbp(img, cfg)? == compute_lbp(&shifted, cfg)?)
}
