//! Connected regions of a copy-move mask, binary morphology with the 3x3
//! square element, and the boundary bands the discriminator samples.

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, BinaryMask, Point};

/// Components smaller than this are treated as detector speckle.
pub const DEFAULT_MIN_AREA: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BBox {
    pub u_min: u32,
    pub v_min: u32,
    pub u_max: u32,
    pub v_max: u32,
}

/// One 8-connected component of a mask. Pixels are kept in raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    label: u32,
    pixels: Vec<Point>,
    bbox: BBox,
}

impl Region {
    /// Builds a region from arbitrary points; they are sorted into raster
    /// order and deduplicated. Connectivity is not checked.
    pub fn from_points(label: u32, mut pixels: Vec<Point>) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::InvalidConfig("region must contain at least one pixel".into()));
        }
        pixels.sort_unstable_by_key(|&(u, v)| (v, u));
        pixels.dedup();
        let bbox = pixels.iter().fold(
            BBox {
                u_min: u32::MAX,
                v_min: u32::MAX,
                u_max: 0,
                v_max: 0,
            },
            |b, &(u, v)| BBox {
                u_min: b.u_min.min(u),
                v_min: b.v_min.min(v),
                u_max: b.u_max.max(u),
                v_max: b.v_max.max(v),
            },
        );
        Ok(Region {
            label,
            pixels,
            bbox,
        })
    }

    pub fn label(&self) -> u32 {
        self.label
    }

    pub fn pixels(&self) -> &[Point] {
        &self.pixels
    }

    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    /// First pixel in raster order.
    pub fn first_pixel(&self) -> Point {
        self.pixels[0]
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.pixels.len() as f64;
        let (su, sv) = self
            .pixels
            .iter()
            .fold((0.0, 0.0), |(su, sv), &(u, v)| (su + f64::from(u), sv + f64::from(v)));
        (su / n, sv / n)
    }

    pub fn with_label(&self, label: u32) -> Region {
        Region {
            label,
            ..self.clone()
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.pixels
            .binary_search_by_key(&(p.1, p.0), |&(u, v)| (v, u))
            .is_ok()
    }

    pub fn to_mask(&self, width: u32, height: u32) -> Result<BinaryMask> {
        BinaryMask::from_points(width, height, &self.pixels)
    }

    /// Sort key: larger area first, then earlier first pixel.
    fn rank_key(&self) -> (std::cmp::Reverse<usize>, u32, u32) {
        let (u, v) = self.first_pixel();
        (std::cmp::Reverse(self.area()), v, u)
    }
}

/// The two regions the discriminator compares. `a` is the larger one when
/// built by [`select_pair`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionPair {
    pub a: Region,
    pub b: Region,
}

impl RegionPair {
    pub fn new(a: Region, b: Region) -> Result<Self> {
        if a.label == b.label {
            return Err(Error::InvalidConfig(format!(
                "region pair shares label {}",
                a.label
            )));
        }
        let (small, large) = if a.area() <= b.area() { (&a, &b) } else { (&b, &a) };
        if small.pixels.iter().any(|&p| large.contains(p)) {
            return Err(Error::InvalidConfig("region pair overlaps".into()));
        }
        Ok(RegionPair { a, b })
    }

    /// Same regions with the roles of `a` and `b` exchanged.
    pub fn swapped(&self) -> RegionPair {
        RegionPair {
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

/// Pixels straddling a region contour.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryBand {
    owner: u32,
    half_width: u32,
    pixels: Vec<Point>,
}

impl BoundaryBand {
    pub fn owner(&self) -> u32 {
        self.owner
    }

    pub fn half_width(&self) -> u32 {
        self.half_width
    }

    /// Band pixels in raster order.
    pub fn pixels(&self) -> &[Point] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// 8-connected components of the marked pixels, largest first (ties: earlier
/// first pixel in raster order). Components under `min_area` are dropped.
/// Labels are assigned 1, 2, ... in the returned order.
pub fn connected_components(mask: &BinaryMask, min_area: usize) -> Vec<Region> {
    let (w, h) = mask.dimensions();
    let bits = mask.bits();
    let mut seen = vec![false; bits.len()];
    let mut stack = Vec::new();
    let mut regions = Vec::new();

    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(i) = stack.pop() {
            let (u, v) = ((i % w as usize) as u32, (i / w as usize) as u32);
            pixels.push((u, v));
            for dv in -1i64..=1 {
                for du in -1i64..=1 {
                    let (nu, nv) = (i64::from(u) + du, i64::from(v) + dv);
                    if nu < 0 || nv < 0 || nu >= i64::from(w) || nv >= i64::from(h) {
                        continue;
                    }
                    let j = nv as usize * w as usize + nu as usize;
                    if bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if pixels.len() >= min_area {
            regions.push(Region::from_points(0, pixels).expect("component is non-empty"));
        }
    }

    regions.sort_by_key(Region::rank_key);
    for (i, r) in regions.iter_mut().enumerate() {
        r.label = i as u32 + 1;
    }
    regions
}

/// Picks the two largest regions, larger first.
pub fn select_pair(regions: &[Region]) -> Result<RegionPair> {
    if regions.len() < 2 {
        return Err(Error::NotEnoughRegions {
            found: regions.len(),
        });
    }
    let mut ranked: Vec<&Region> = regions.iter().collect();
    ranked.sort_by_key(|r| r.rank_key());
    RegionPair::new(ranked[0].clone(), ranked[1].clone())
}

/// Components of `mask` reduced to the pair under analysis.
pub fn pair_from_mask(mask: &BinaryMask, min_area: usize) -> Result<RegionPair> {
    select_pair(&connected_components(mask, min_area))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MorphOp {
    Dilate,
    Erode,
}

/// One 3x3 step done as two separable 3-tap passes. Pixels outside the
/// raster count as unmarked for both operations.
fn morph_step(bits: &[bool], w: usize, h: usize, op: MorphOp) -> Vec<bool> {
    let combine = |a: bool, b: bool| match op {
        MorphOp::Dilate => a || b,
        MorphOp::Erode => a && b,
    };
    let at = |src: &[bool], u: isize, v: isize| -> bool {
        if u < 0 || v < 0 || u >= w as isize || v >= h as isize {
            false
        } else {
            src[v as usize * w + u as usize]
        }
    };
    let mut horiz = vec![false; bits.len()];
    for v in 0..h as isize {
        for u in 0..w as isize {
            horiz[v as usize * w + u as usize] = combine(
                combine(at(bits, u - 1, v), at(bits, u, v)),
                at(bits, u + 1, v),
            );
        }
    }
    let mut out = vec![false; bits.len()];
    for v in 0..h as isize {
        for u in 0..w as isize {
            out[v as usize * w + u as usize] = combine(
                combine(at(&horiz, u, v - 1), at(&horiz, u, v)),
                at(&horiz, u, v + 1),
            );
        }
    }
    out
}

/// Binary dilation or erosion with the 3x3 square, applied `iterations`
/// times. Zero iterations returns the input unchanged.
pub fn morphology(mask: &BinaryMask, op: MorphOp, iterations: u32) -> BinaryMask {
    let (w, h) = mask.dimensions();
    let mut bits = mask.bits().to_vec();
    for _ in 0..iterations {
        bits = morph_step(&bits, w as usize, h as usize, op);
    }
    BinaryMask::new(w, h, bits).expect("dimensions unchanged")
}

pub fn dilate(mask: &BinaryMask, iterations: u32) -> BinaryMask {
    morphology(mask, MorphOp::Dilate, iterations)
}

pub fn erode(mask: &BinaryMask, iterations: u32) -> BinaryMask {
    morphology(mask, MorphOp::Erode, iterations)
}

/// Dilation followed by erosion. The raster is padded by `iterations`
/// for the duration, so marked pixels on the border survive and the result
/// always contains the input.
pub fn close(mask: &BinaryMask, iterations: u32) -> BinaryMask {
    let (w, h) = mask.dimensions();
    let pad = iterations;
    let (pw, ph) = (w + 2 * pad, h + 2 * pad);
    let padded = BinaryMask::from_fn(pw, ph, |u, v| {
        u >= pad && v >= pad && u < w + pad && v < h + pad && mask.get(u - pad, v - pad)
    })
    .expect("padded dimensions are non-zero");
    let closed = erode(&dilate(&padded, iterations), iterations);
    BinaryMask::from_fn(w, h, |u, v| closed.get(u + pad, v + pad)).expect("dimensions unchanged")
}

/// Band of half-width `w` around `region`'s contour:
/// `dilate(region, w) \ erode(region, w)`, minus the pixels of `other`, minus
/// every pixel closer than `clip_margin` to the raster border.
///
/// `mask` supplies the raster geometry; `region` must lie inside it.
pub fn boundary_band(
    region: &Region,
    mask: &BinaryMask,
    other: Option<&Region>,
    w: u32,
    clip_margin: u32,
) -> Result<BoundaryBand> {
    if w == 0 {
        return Err(Error::InvalidConfig("band half-width must be >= 1".into()));
    }
    let (width, height) = mask.dimensions();
    for r in std::iter::once(region).chain(other) {
        let rb = r.bbox();
        ensure_same_dims(
            (width, height),
            (width.max(rb.u_max + 1), height.max(rb.v_max + 1)),
        )?;
    }
    let bb = region.bbox();

    // Work on a window around the region: big enough to hold the dilation,
    // and the erosion only depends on pixels inside the bbox anyway.
    let u0 = bb.u_min.saturating_sub(w);
    let v0 = bb.v_min.saturating_sub(w);
    let u1 = (bb.u_max + w).min(width - 1);
    let v1 = (bb.v_max + w).min(height - 1);
    let (ww, wh) = (u1 - u0 + 1, v1 - v0 + 1);
    let local = BinaryMask::from_points(
        ww,
        wh,
        &region
            .pixels()
            .iter()
            .map(|&(u, v)| (u - u0, v - v0))
            .collect::<Vec<_>>(),
    )?;
    // Window edges that are not raster edges sit at least one pixel outside
    // the bbox, so treating them as unmarked matches the full-raster result.
    let outer = dilate(&local, w);
    let inner = erode(&local, w);

    let m = clip_margin;
    let mut pixels = Vec::new();
    for lv in 0..wh {
        for lu in 0..ww {
            if !outer.get(lu, lv) || inner.get(lu, lv) {
                continue;
            }
            let (u, v) = (lu + u0, lv + v0);
            if u < m || v < m || u + m >= width || v + m >= height {
                continue;
            }
            if other.is_some_and(|o| o.contains((u, v))) {
                continue;
            }
            pixels.push((u, v));
        }
    }
    if pixels.is_empty() {
        return Err(Error::EmptyBand {
            label: region.label(),
        });
    }
    Ok(BoundaryBand {
        owner: region.label(),
        half_width: w,
        pixels,
    })
}
