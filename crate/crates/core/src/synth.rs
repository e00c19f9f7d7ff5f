//! Ground-truthed copy-move forgeries.
//!
//! A source footprint is copied to `position + offset`. With
//! [`Blend::GaussianFeather`] the pasted contour is composited with a linear
//! alpha ramp and then low-pass filtered, inside the pasted region's boundary
//! band only; the source region and its surroundings are never touched.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discriminator::DEFAULT_BAND_WIDTH;
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, Point};
use crate::region::{boundary_band, connected_components, dilate, Region};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Rect { width: u32, height: u32 },
    /// Pixels whose centre satisfies `(x/rx)^2 + (y/ry)^2 <= 1` relative to
    /// the centre of a `(2 ceil(rx) + 1) x (2 ceil(ry) + 1)` box.
    Ellipse { rx: f64, ry: f64 },
    /// Explicit footprint, relative to `position`.
    Pixels { points: Vec<Point> },
}

impl Shape {
    /// Footprint relative to the top-left of the shape's box.
    pub fn footprint(&self) -> Vec<Point> {
        match self {
            Shape::Rect { width, height } => (0..*height)
                .flat_map(|v| (0..*width).map(move |u| (u, v)))
                .collect(),
            Shape::Ellipse { rx, ry } => {
                let (cx, cy) = (rx.ceil() as u32, ry.ceil() as u32);
                let mut pts = Vec::new();
                for v in 0..=2 * cy {
                    for u in 0..=2 * cx {
                        let x = (f64::from(u) - f64::from(cx)) / rx;
                        let y = (f64::from(v) - f64::from(cy)) / ry;
                        if x * x + y * y <= 1.0 {
                            pts.push((u, v));
                        }
                    }
                }
                pts
            }
            Shape::Pixels { points } => points.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Blend {
    None,
    GaussianFeather { sigma: f64, band: u32 },
}

impl Blend {
    fn band(&self) -> u32 {
        match self {
            Blend::None => 0,
            Blend::GaussianFeather { band, .. } => *band,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForgerySpec {
    pub shape: Shape,
    /// Top-left of the source shape's box.
    pub position: Point,
    pub offset: (i32, i32),
    pub blend: Blend,
    pub seed: u64,
}

impl ForgerySpec {
    /// Required Chebyshev gap between source and pasted footprints: the
    /// feather band plus a discriminator band plus one, so neither the
    /// feathering nor the pasted region's analysis band reaches the source.
    pub fn min_gap(&self) -> u32 {
        self.blend.band() + DEFAULT_BAND_WIDTH + 1
    }

    pub fn source_pixels(&self) -> Vec<Point> {
        let (pu, pv) = self.position;
        self.shape
            .footprint()
            .into_iter()
            .map(|(u, v)| (u + pu, v + pv))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(skip)]
    pub mask: Option<BinaryMask>,
    /// Component labels as assigned by `connected_components` on the mask.
    pub source_label: u32,
    pub pasted_label: u32,
    pub source_centroid: (f64, f64),
    pub pasted_centroid: (f64, f64),
    pub spec: ForgerySpec,
}

impl GroundTruth {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Clone, Debug)]
pub struct Forgery {
    pub image: GrayImage,
    pub truth: GroundTruth,
    /// Pixels rewritten by feathering (empty for a plain paste).
    pub feathered: Vec<Point>,
}

impl Forgery {
    pub fn mask(&self) -> &BinaryMask {
        self.truth.mask.as_ref().expect("synthesized truth carries its mask")
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    (-r..=r)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// Gaussian-blurred values of `src` at the requested points. The kernel is
/// renormalized over the taps that fall inside the raster.
fn blur_at(src: &[f64], w: u32, h: u32, sigma: f64, points: &[Point]) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let (w, h) = (i64::from(w), i64::from(h));
    points
        .iter()
        .map(|&(u, v)| {
            let (u, v) = (i64::from(u), i64::from(v));
            let (mut acc, mut norm) = (0.0, 0.0);
            for (j, ky) in kernel.iter().enumerate() {
                let y = v + j as i64 - r;
                if y < 0 || y >= h {
                    continue;
                }
                for (i, kx) in kernel.iter().enumerate() {
                    let x = u + i as i64 - r;
                    if x < 0 || x >= w {
                        continue;
                    }
                    let k = kx * ky;
                    acc += k * src[(y * w + x) as usize];
                    norm += k;
                }
            }
            acc / norm
        })
        .collect()
}

/// Chebyshev depth of each pixel of `inside` (1 on the contour), up to
/// `limit`.
fn depth_inside(mask: &BinaryMask, limit: u32) -> Vec<u32> {
    let mut depth = vec![0u32; mask.bits().len()];
    let mut layer = mask.clone();
    for d in 1..=limit {
        let eroded = crate::region::erode(&layer, 1);
        for (i, (&was, &still)) in layer.bits().iter().zip(eroded.bits()).enumerate() {
            if was && !still {
                depth[i] = d;
            }
        }
        layer = eroded;
    }
    for (i, &b) in layer.bits().iter().enumerate() {
        if b {
            depth[i] = limit + 1;
        }
    }
    depth
}

/// Pastes the source footprint at its offset, optionally feathering the
/// pasted contour.
pub fn synthesize(img: &GrayImage, spec: &ForgerySpec) -> Result<Forgery> {
    let (w, h) = img.dimensions();
    let source = spec.source_pixels();
    if source.is_empty() {
        return Err(Error::GeometryViolation("empty source footprint".into()));
    }
    let (du, dv) = spec.offset;
    let mut pasted = Vec::with_capacity(source.len());
    for &(u, v) in &source {
        let (pu, pv) = (i64::from(u) + i64::from(du), i64::from(v) + i64::from(dv));
        if u >= w || v >= h || pu < 0 || pv < 0 || pu >= i64::from(w) || pv >= i64::from(h) {
            return Err(Error::GeometryViolation(format!(
                "footprint leaves the {w}x{h} raster"
            )));
        }
        pasted.push((pu as u32, pv as u32));
    }
    let source_mask = BinaryMask::from_points(w, h, &source)?;
    let guard = dilate(&source_mask, spec.min_gap());
    if pasted.iter().any(|&(u, v)| guard.get(u, v)) {
        return Err(Error::GeometryViolation(format!(
            "pasted footprint within {} px of the source",
            spec.min_gap()
        )));
    }

    let mut forged = img.clone();
    for (&(su, sv), &(pu, pv)) in source.iter().zip(&pasted) {
        forged.set(pu, pv, img.get(su, sv));
    }

    let pasted_region = Region::from_points(2, pasted.clone())?;
    let pasted_mask = BinaryMask::from_points(w, h, &pasted)?;
    let mut feathered = Vec::new();
    if let Blend::GaussianFeather { sigma, band } = spec.blend {
        if sigma.is_nan() || sigma <= 0.0 || band == 0 {
            return Err(Error::InvalidConfig(
                "feathering needs sigma > 0 and band >= 1".into(),
            ));
        }
        feathered = boundary_band(&pasted_region, &pasted_mask, None, band, 0)?
            .pixels()
            .to_vec();
        let depth = depth_inside(&pasted_mask, band);
        // composite: background outside, alpha ramp over the inner band
        let mut composite: Vec<f64> = forged.data().iter().map(|&x| f64::from(x)).collect();
        for &(u, v) in &feathered {
            let i = v as usize * w as usize + u as usize;
            let d = depth[i];
            if d == 0 {
                continue;
            }
            let alpha = (f64::from(d) - 0.5) / f64::from(band);
            let paste = f64::from(forged.get(u, v));
            let background = f64::from(img.get(u, v));
            composite[i] = alpha * paste + (1.0 - alpha) * background;
        }
        let blurred = blur_at(&composite, w, h, sigma, &feathered);
        for (&(u, v), x) in feathered.iter().zip(blurred) {
            forged.set(u, v, x.round().clamp(0.0, 255.0) as u8);
        }
    }

    let mask = source_mask.union(&pasted_mask)?;
    let components = connected_components(&mask, 1);
    let label_of = |p: Point| {
        components
            .iter()
            .find(|r| r.contains(p))
            .map(Region::label)
            .expect("footprint pixel belongs to a component")
    };
    let source_region = Region::from_points(1, source)?;
    let truth = GroundTruth {
        source_label: label_of(source_region.first_pixel()),
        pasted_label: label_of(pasted_region.first_pixel()),
        source_centroid: source_region.centroid(),
        pasted_centroid: pasted_region.centroid(),
        spec: spec.clone(),
        mask: Some(mask),
    };
    Ok(Forgery {
        image: forged,
        truth,
        feathered,
    })
}

/// Appearance of generated base textures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureParams {
    /// Standard deviation of the smooth multi-octave component.
    pub structure_std: f64,
    /// Standard deviation of the per-pixel Gaussian grain.
    pub grain_std: f64,
}

impl Default for TextureParams {
    fn default() -> Self {
        Self {
            structure_std: STRUCTURE_STD,
            grain_std: GRAIN_STD,
        }
    }
}

// Grain-dominated on purpose: with strong large-scale structure an exact
// paste still breaks that structure along its seam, which the LBP statistics
// pick up, and a smooth texture makes feathering look like added detail.
const STRUCTURE_STD: f64 = 1.5;
const GRAIN_STD: f64 = 25.0;

/// Seeded texture: value-noise octaves whose amplitude grows with their
/// lattice spacing (a 1/f-like structure layer) plus Gaussian grain, centred
/// on 128 and clamped to 8 bits.
pub fn fractal_texture(width: u32, height: u32, seed: u64, params: TextureParams) -> Result<GrayImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as usize, height as usize);
    let mut field = vec![0.0f64; w * h];
    for spacing in [64usize, 32, 16, 8, 4, 2] {
        let gw = w / spacing + 2;
        let gh = h / spacing + 2;
        let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let amp = spacing as f64;
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        for v in 0..h {
            let gy = v as f64 / spacing as f64;
            let (y0, ty) = (gy.floor() as usize, smooth(gy.fract()));
            for u in 0..w {
                let gx = u as f64 / spacing as f64;
                let (x0, tx) = (gx.floor() as usize, smooth(gx.fract()));
                let at = |x: usize, y: usize| lattice[y * gw + x];
                let top = at(x0, y0) + tx * (at(x0 + 1, y0) - at(x0, y0));
                let bottom = at(x0, y0 + 1) + tx * (at(x0 + 1, y0 + 1) - at(x0, y0 + 1));
                field[v * w + u] += amp * (top + ty * (bottom - top));
            }
        }
    }
    let n = field.len() as f64;
    let mean = field.iter().sum::<f64>() / n;
    let sd = (field.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    let grain = Normal::new(0.0, params.grain_std.max(0.0))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let data = field
        .iter()
        .map(|x| {
            let structure = params.structure_std * (x - mean) / sd;
            (128.0 + structure + grain.sample(&mut rng)).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(width, height, data)
}

/// `count` textured base images derived from one seed.
pub fn base_images(count: usize, width: u32, height: u32, seed: u64) -> Result<Vec<GrayImage>> {
    base_images_with(count, width, height, seed, TextureParams::default())
}

pub fn base_images_with(
    count: usize,
    width: u32,
    height: u32,
    seed: u64,
    params: TextureParams,
) -> Result<Vec<GrayImage>> {
    (0..count)
        .map(|i| {
            let s = seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1));
            fractal_texture(width, height, s, params)
        })
        .collect()
}

/// How corpus forgeries are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecDistribution {
    /// Inclusive footprint area range in pixels.
    pub area: (usize, usize),
    /// Width / height ratio range.
    pub aspect: (f64, f64),
    pub blend: Blend,
    /// Gap enforced between source and paste regardless of blend, so the
    /// same seed yields the same geometry with and without feathering.
    pub gap_band: u32,
}

impl Default for SpecDistribution {
    fn default() -> Self {
        Self {
            area: (2000, 6000),
            aspect: (0.6, 1.6),
            blend: Blend::GaussianFeather {
                sigma: 2.0,
                band: 4,
            },
            gap_band: 4,
        }
    }
}

impl SpecDistribution {
    pub fn with_blend(blend: Blend) -> Self {
        Self {
            blend,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub id: String,
    pub base_index: usize,
    pub forgery: Forgery,
}

pub const MAX_ATTEMPTS: usize = 100;

fn draw_spec(
    rng: &mut ChaCha8Rng,
    dims: (u32, u32),
    dist: &SpecDistribution,
    seed: u64,
) -> Option<ForgerySpec> {
    let (w, h) = dims;
    let area = rng.gen_range(dist.area.0..=dist.area.1) as f64;
    let aspect = rng.gen_range(dist.aspect.0..=dist.aspect.1);
    let shape = if rng.gen_bool(0.5) {
        let width = (area * aspect).sqrt().round().max(1.0) as u32;
        let height = (area / f64::from(width)).round().max(1.0) as u32;
        Shape::Rect { width, height }
    } else {
        let rx = (area * aspect / std::f64::consts::PI).sqrt();
        let ry = area / (std::f64::consts::PI * rx);
        Shape::Ellipse { rx, ry }
    };
    let fp = shape.footprint();
    if fp.len() < dist.area.0 || fp.len() > dist.area.1 {
        return None;
    }
    let sw = fp.iter().map(|p| p.0).max()? + 1;
    let sh = fp.iter().map(|p| p.1).max()? + 1;
    if sw >= w || sh >= h {
        return None;
    }
    let position = (rng.gen_range(0..=w - sw), rng.gen_range(0..=h - sh));
    let target = (rng.gen_range(0..=w - sw), rng.gen_range(0..=h - sh));
    Some(ForgerySpec {
        shape,
        position,
        offset: (
            target.0 as i32 - position.0 as i32,
            target.1 as i32 - position.1 as i32,
        ),
        blend: dist.blend,
        seed,
    })
}

fn draw_sample(base: &GrayImage, index: usize, dist: &SpecDistribution, seed: u64) -> Result<Forgery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let gap = dist.gap_band + DEFAULT_BAND_WIDTH + 1;
    for _ in 0..MAX_ATTEMPTS {
        let Some(spec) = draw_spec(&mut rng, base.dimensions(), dist, seed) else {
            continue;
        };
        // enforce the blend-independent gap before synthesizing
        let src = BinaryMask::from_points(base.width(), base.height(), &spec.source_pixels())?;
        let guard = dilate(&src, gap);
        let clear = spec.source_pixels().iter().all(|&(u, v)| {
            let (pu, pv) = (u as i32 + spec.offset.0, v as i32 + spec.offset.1);
            !guard.get(pu as u32, pv as u32)
        });
        if !clear {
            continue;
        }
        match synthesize(base, &spec) {
            Ok(f) => return Ok(f),
            Err(Error::GeometryViolation(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SampleExhausted {
        index,
        attempts: MAX_ATTEMPTS,
    })
}

/// Zero-padded sample id, at least three digits.
pub fn sample_id(index: usize, n: usize) -> String {
    let digits = n.saturating_sub(1).to_string().len().max(3);
    format!("{index:0digits$}")
}

/// `n` forgeries cycling through `bases`. Sample `i` draws from its own
/// stream of the seeded generator, so the corpus is independent of
/// scheduling.
pub fn corpus(bases: &[GrayImage], n: usize, dist: &SpecDistribution, seed: u64) -> Result<Vec<Sample>> {
    if n == 0 || bases.is_empty() {
        return Err(Error::InvalidConfig(
            "corpus needs n >= 1 and at least one base image".into(),
        ));
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let base_index = i % bases.len();
            Ok(Sample {
                id: sample_id(i, n),
                base_index,
                forgery: draw_sample(&bases[base_index], i, dist, seed)?,
            })
        })
        .collect()
}

/// Writes `images/ID.png`, `masks/ID.png` and `truth/ID.json` under `root`.
pub fn write_corpus(root: &Path, samples: &[Sample]) -> Result<()> {
    for sub in ["images", "masks", "truth"] {
        std::fs::create_dir_all(root.join(sub))?;
    }
    for s in samples {
        let f = &s.forgery;
        std::fs::write(root.join("images").join(format!("{}.png", s.id)), f.image.to_png()?)?;
        std::fs::write(root.join("masks").join(format!("{}.png", s.id)), f.mask().to_png()?)?;
        std::fs::write(
            root.join("truth").join(format!("{}.json", s.id)),
            f.truth.to_json()? + "\n",
        )?;
    }
    Ok(())
}
