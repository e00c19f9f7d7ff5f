//! Block-based copy-move detector.
//!
//! Every overlapping `B x B` block is described by its lowest-frequency DCT
//! coefficients (zigzag order, scalar-quantized). Descriptors are sorted
//! lexicographically so identical blocks become neighbours, matched pairs are
//! grouped by their translation, and only translations supported by many
//! pairs survive. The surviving block footprints, closed once, form the
//! output mask.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, Point};
use crate::region::close;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub block_size: u32,
    pub zigzag_count: usize,
    pub quant: f64,
    /// Blocks with lower pixel variance are skipped as flat.
    pub var_min: f64,
    /// How many sorted successors each block is compared with.
    pub neighbor_window: usize,
    /// Minimum Euclidean distance between matched block origins; `None`
    /// means `block_size + 1`.
    pub min_offset: Option<f64>,
    pub min_support: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            block_size: 16,
            zigzag_count: 16,
            quant: 16.0,
            var_min: 5.0,
            neighbor_window: 4,
            min_offset: None,
            min_support: 50,
        }
    }
}

impl DetectorParams {
    pub fn effective_min_offset(&self) -> f64 {
        self.min_offset
            .unwrap_or(f64::from(self.block_size) + 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.block_size as usize;
        if b < 8 {
            return Err(Error::InvalidConfig(format!(
                "block size {b} must be >= 8"
            )));
        }
        if self.zigzag_count == 0 || self.zigzag_count > b * b {
            return Err(Error::InvalidConfig(format!(
                "zigzag count {} outside 1..={}",
                self.zigzag_count,
                b * b
            )));
        }
        if self.quant.is_nan() || self.quant <= 0.0 {
            return Err(Error::InvalidConfig("quantization step must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockFeature {
    /// Top-left corner of the block.
    pub origin: Point,
    pub descriptor: Vec<i32>,
}

/// Translation between matched blocks, canonical so that `dv > 0`, or
/// `dv == 0 && du > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShiftVector {
    pub du: i32,
    pub dv: i32,
}

/// A matched block pair; `source` precedes `target` in raster order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatchPair {
    pub source: Point,
    pub target: Point,
}

impl MatchPair {
    pub fn canonical(p: Point, q: Point) -> MatchPair {
        if (p.1, p.0) <= (q.1, q.0) {
            MatchPair { source: p, target: q }
        } else {
            MatchPair { source: q, target: p }
        }
    }

    pub fn shift(&self) -> ShiftVector {
        ShiftVector {
            du: self.target.0 as i32 - self.source.0 as i32,
            dv: self.target.1 as i32 - self.source.1 as i32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftSupport {
    pub du: i32,
    pub dv: i32,
    pub support: usize,
}

impl ShiftSupport {
    pub fn shift(&self) -> ShiftVector {
        ShiftVector {
            du: self.du,
            dv: self.dv,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult {
    pub mask: BinaryMask,
    /// Surviving translations, strongest first.
    pub dominant_shifts: Vec<ShiftSupport>,
    pub pairs: Vec<MatchPair>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    dominant_shifts: &'a [ShiftSupport],
    params: &'a DetectorParams,
}

impl DetectionResult {
    /// `{dominant_shifts, params}` JSON written next to the mask.
    pub fn sidecar_json(&self, params: &DetectorParams) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Sidecar {
            dominant_shifts: &self.dominant_shifts,
            params,
        })?)
    }
}

/// Orthonormal DCT-II basis, `basis[k * n + x] = a(k) cos(pi (2x + 1) k / 2n)`.
pub fn dct_basis(n: usize) -> Vec<f64> {
    let mut basis = vec![0.0; n * n];
    let nf = n as f64;
    for k in 0..n {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for x in 0..n {
            basis[k * n + x] =
                scale * (std::f64::consts::PI * (2 * x + 1) as f64 * k as f64 / (2.0 * nf)).cos();
        }
    }
    basis
}

/// First `count` `(row, col)` frequency indices of an `n x n` block in JPEG
/// zigzag order: (0,0), (0,1), (1,0), (2,0), (1,1), (0,2), ...
pub fn zigzag_order(n: usize, count: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(count.min(n * n));
    for s in 0..(2 * n - 1) {
        let lo = s.saturating_sub(n - 1);
        let hi = s.min(n - 1);
        let diag: Vec<(usize, usize)> = if s % 2 == 0 {
            (lo..=hi).rev().map(|r| (r, s - r)).collect()
        } else {
            (lo..=hi).map(|r| (r, s - r)).collect()
        };
        for rc in diag {
            if out.len() == count {
                return out;
            }
            out.push(rc);
        }
    }
    out
}

/// Selected 2-D DCT-II coefficients of a row-major `n x n` block. Only the
/// columns the selection touches are transformed.
pub fn dct_coefficients(block: &[f64], n: usize, basis: &[f64], order: &[(usize, usize)]) -> Vec<f64> {
    let max_col = order.iter().map(|&(_, c)| c).max().unwrap_or(0);
    let cols = max_col + 1;
    let mut rows = vec![0.0; n * cols];
    for y in 0..n {
        let line = &block[y * n..(y + 1) * n];
        for l in 0..cols {
            let b = &basis[l * n..(l + 1) * n];
            rows[y * cols + l] = line.iter().zip(b).map(|(f, c)| f * c).sum();
        }
    }
    order
        .iter()
        .map(|&(k, l)| {
            let b = &basis[k * n..(k + 1) * n];
            (0..n).map(|y| b[y] * rows[y * cols + l]).sum()
        })
        .collect()
}

/// Prefix sums of intensities and squared intensities.
struct Integral {
    stride: usize,
    sum: Vec<u64>,
    sq: Vec<u64>,
}

impl Integral {
    fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let stride = w + 1;
        let mut sum = vec![0u64; stride * (h + 1)];
        let mut sq = vec![0u64; stride * (h + 1)];
        for v in 0..h {
            let (mut rs, mut rq) = (0u64, 0u64);
            for (u, &px) in img.row(v as u32).iter().enumerate() {
                let x = u64::from(px);
                rs += x;
                rq += x * x;
                sum[(v + 1) * stride + u + 1] = sum[v * stride + u + 1] + rs;
                sq[(v + 1) * stride + u + 1] = sq[v * stride + u + 1] + rq;
            }
        }
        Integral { stride, sum, sq }
    }

    fn rect(table: &[u64], stride: usize, u: usize, v: usize, b: usize) -> u64 {
        table[(v + b) * stride + u + b] + table[v * stride + u]
            - table[v * stride + u + b]
            - table[(v + b) * stride + u]
    }

    fn variance(&self, u: usize, v: usize, b: usize) -> f64 {
        let n = (b * b) as f64;
        let s = Self::rect(&self.sum, self.stride, u, v, b) as f64;
        let q = Self::rect(&self.sq, self.stride, u, v, b) as f64;
        (q / n - (s / n) * (s / n)).max(0.0)
    }
}

/// One descriptor per overlapping block (stride 1), in raster order of the
/// block origins. Blocks with variance below `var_min` are skipped.
pub fn extract_block_features(img: &GrayImage, params: &DetectorParams) -> Result<Vec<BlockFeature>> {
    params.validate()?;
    let b = params.block_size;
    let (w, h) = img.dimensions();
    if w < b || h < b {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: b - 1,
        });
    }
    let n = b as usize;
    let basis = dct_basis(n);
    let order = zigzag_order(n, params.zigzag_count);
    let integral = Integral::new(img);

    let features = (0..=h - b)
        .into_par_iter()
        .flat_map_iter(|v| {
            let mut block = vec![0.0; n * n];
            let mut row_out = Vec::new();
            for u in 0..=w - b {
                if integral.variance(u as usize, v as usize, n) < params.var_min {
                    continue;
                }
                for y in 0..n {
                    let src = &img.row(v + y as u32)[u as usize..u as usize + n];
                    for (dst, &px) in block[y * n..(y + 1) * n].iter_mut().zip(src) {
                        *dst = f64::from(px);
                    }
                }
                let descriptor = dct_coefficients(&block, n, &basis, &order)
                    .into_iter()
                    .map(|c| (c / params.quant).round() as i32)
                    .collect();
                row_out.push(BlockFeature {
                    origin: (u, v),
                    descriptor,
                });
            }
            row_out
        })
        .collect();
    Ok(features)
}

fn origin_distance(p: Point, q: Point) -> f64 {
    let du = f64::from(p.0) - f64::from(q.0);
    let dv = f64::from(p.1) - f64::from(q.1);
    (du * du + dv * dv).sqrt()
}

/// Sorts descriptors lexicographically and pairs each block with identical
/// descriptors among its next `neighbor_window` successors, skipping pairs
/// closer than the minimum offset. Each pair is emitted once, canonically.
pub fn match_blocks(features: &[BlockFeature], params: &DetectorParams) -> Vec<MatchPair> {
    let mut sorted: Vec<&BlockFeature> = features.iter().collect();
    sorted.par_sort_unstable_by(|a, b| {
        a.descriptor
            .cmp(&b.descriptor)
            .then((a.origin.1, a.origin.0).cmp(&(b.origin.1, b.origin.0)))
    });
    let min_offset = params.effective_min_offset();
    let mut pairs = Vec::new();
    for (i, fi) in sorted.iter().enumerate() {
        for fj in sorted.iter().skip(i + 1).take(params.neighbor_window) {
            // equal descriptors are contiguous after sorting
            if fj.descriptor != fi.descriptor {
                break;
            }
            if origin_distance(fi.origin, fj.origin) >= min_offset {
                pairs.push(MatchPair::canonical(fi.origin, fj.origin));
            }
        }
    }
    pairs
}

/// Keeps pairs whose translation is shared by at least `min_support` pairs.
/// Returns the survivors (input order) and their translations, strongest
/// first with ties ordered by `(dv, du)`.
pub fn filter_by_shift(pairs: &[MatchPair], min_support: usize) -> (Vec<MatchPair>, Vec<ShiftSupport>) {
    let mut buckets: BTreeMap<(i32, i32), usize> = BTreeMap::new();
    for p in pairs {
        let s = p.shift();
        *buckets.entry((s.dv, s.du)).or_default() += 1;
    }
    let mut dominant: Vec<ShiftSupport> = buckets
        .iter()
        .filter(|(_, &count)| count >= min_support)
        .map(|(&(dv, du), &support)| ShiftSupport { du, dv, support })
        .collect();
    dominant.sort_by_key(|s| (std::cmp::Reverse(s.support), s.dv, s.du));
    let survivors = pairs
        .iter()
        .filter(|p| {
            let s = p.shift();
            buckets[&(s.dv, s.du)] >= min_support
        })
        .copied()
        .collect();
    (survivors, dominant)
}

/// Footprints of both blocks of every pair, unclosed.
pub fn footprint_mask(width: u32, height: u32, block: u32, pairs: &[MatchPair]) -> Result<BinaryMask> {
    let mut mask = BinaryMask::empty(width, height)?;
    for p in pairs {
        for (u0, v0) in [p.source, p.target] {
            for v in v0..(v0 + block).min(height) {
                for u in u0..(u0 + block).min(width) {
                    mask.set(u, v, true);
                }
            }
        }
    }
    Ok(mask)
}

pub fn detect(img: &GrayImage, params: &DetectorParams) -> Result<DetectionResult> {
    let features = extract_block_features(img, params)?;
    let pairs = match_blocks(&features, params);
    let (survivors, dominant_shifts) = filter_by_shift(&pairs, params.min_support);
    let raw = footprint_mask(img.width(), img.height(), params.block_size, &survivors)?;
    Ok(DetectionResult {
        mask: close(&raw, 1),
        dominant_shifts,
        pairs: survivors,
    })
}
