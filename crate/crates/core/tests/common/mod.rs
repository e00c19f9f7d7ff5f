//! Independent reference implementations and fixtures shared by the
//! integration tests. Everything here is deliberately naive: direct loops,
//! no precomputed tables, no parallelism.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use copymove_lbp::detector::{BlockFeature, MatchPair};
use copymove_lbp::raster::{BinaryMask, GrayImage, Point};
use copymove_lbp::synth::{base_images, corpus, Blend, Sample, SpecDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.gen()).unwrap()
}

/// Snaps values within 1e-9 of an integer onto it, so that e.g. cos(pi/2)
/// lands exactly on the grid.
fn snap(x: f64) -> f64 {
    if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x
    }
}

/// Per-pixel circular LBP straight from the definition: neighbour p at angle
/// 2*pi*p/P counter-clockwise from the x axis (image rows grow downwards),
/// bilinear interpolation of the four surrounding pixels, relative to the
/// centre, bit set when the difference is >= 0. `None` inside the margin.
pub fn naive_lbp(img: &GrayImage, p_count: u32, radius: f64) -> Vec<Option<u16>> {
    let (w, h) = img.dimensions();
    let margin = radius.ceil() as i64;
    let mut out = Vec::with_capacity((w * h) as usize);
    for v in 0..h as i64 {
        for u in 0..w as i64 {
            if u < margin || v < margin || u >= w as i64 - margin || v >= h as i64 - margin {
                out.push(None);
                continue;
            }
            let gc = f64::from(img.get(u as u32, v as u32));
            let rel = |x: i64, y: i64| f64::from(img.get(x as u32, y as u32)) - gc;
            let mut code = 0u16;
            for p in 0..p_count {
                let angle = 2.0 * std::f64::consts::PI * f64::from(p) / f64::from(p_count);
                // Weights come from the offset alone, so every centre
                // interpolates with identical coefficients.
                let dx = snap(radius * angle.cos());
                let dy = snap(-radius * angle.sin());
                let (tx, ty) = (dx - dx.floor(), dy - dy.floor());
                let (x0, y0) = (u + dx.floor() as i64, v + dy.floor() as i64);
                let x1 = if tx == 0.0 { x0 } else { x0 + 1 };
                let y1 = if ty == 0.0 { y0 } else { y0 + 1 };
                let upper = rel(x0, y0) + tx * (rel(x1, y0) - rel(x0, y0));
                let lower = rel(x0, y1) + tx * (rel(x1, y1) - rel(x0, y1));
                let g = upper + ty * (lower - upper);
                if g >= 0.0 {
                    code += 1 << p;
                }
            }
            out.push(Some(code));
        }
    }
    out
}

/// 8-connected components by union-find, as pixel sets.
pub fn naive_components(mask: &BinaryMask) -> Vec<BTreeSet<Point>> {
    let (w, h) = mask.dimensions();
    let idx = |u: u32, v: u32| (v * w + u) as usize;
    let mut parent: Vec<usize> = (0..(w * h) as usize).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for v in 0..h {
        for u in 0..w {
            if !mask.get(u, v) {
                continue;
            }
            for (du, dv) in [(-1i64, -1i64), (0, -1), (1, -1), (-1, 0)] {
                let (nu, nv) = (u as i64 + du, v as i64 + dv);
                if nu < 0 || nv < 0 || nu >= w as i64 || !mask.get(nu as u32, nv as u32) {
                    continue;
                }
                let (a, b) = (find(&mut parent, idx(u, v)), find(&mut parent, idx(nu as u32, nv as u32)));
                parent[a] = b;
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<Point>> = BTreeMap::new();
    for v in 0..h {
        for u in 0..w {
            if mask.get(u, v) {
                let root = find(&mut parent, idx(u, v));
                groups.entry(root).or_default().insert((u, v));
            }
        }
    }
    groups.into_values().collect()
}

/// Chebyshev-ball dilation of a point set by `r`, clipped to the raster.
pub fn naive_dilate(set: &BTreeSet<Point>, w: u32, h: u32, r: u32) -> BTreeSet<Point> {
    let r = i64::from(r);
    let mut out = BTreeSet::new();
    for &(u, v) in set {
        for dv in -r..=r {
            for du in -r..=r {
                let (x, y) = (i64::from(u) + du, i64::from(v) + dv);
                if x >= 0 && y >= 0 && x < i64::from(w) && y < i64::from(h) {
                    out.insert((x as u32, y as u32));
                }
            }
        }
    }
    out
}

/// Erosion with outside-the-raster treated as background.
pub fn naive_erode(set: &BTreeSet<Point>, r: u32) -> BTreeSet<Point> {
    let r = i64::from(r);
    set.iter()
        .copied()
        .filter(|&(u, v)| {
            (-r..=r).all(|dv| {
                (-r..=r).all(|du| {
                    let (x, y) = (i64::from(u) + du, i64::from(v) + dv);
                    x >= 0 && y >= 0 && set.contains(&(x as u32, y as u32))
                })
            })
        })
        .collect()
}

/// Sample standard deviation (n - 1) of the normalized histogram, summed
/// term by term.
pub fn direct_std(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let n = counts.len() as f64;
    let mut mean = 0.0;
    for &c in counts {
        mean += c as f64 / total as f64;
    }
    mean /= n;
    let mut ss = 0.0;
    for &c in counts {
        let d = c as f64 / total as f64 - mean;
        ss += d * d;
    }
    (ss / (n - 1.0)).sqrt()
}

/// All canonical pairs of blocks with identical descriptors at least
/// `min_offset` apart.
pub fn naive_matches(features: &[BlockFeature], min_offset: f64) -> BTreeSet<(Point, Point)> {
    let mut out = BTreeSet::new();
    for (i, a) in features.iter().enumerate() {
        for b in &features[i + 1..] {
            if a.descriptor != b.descriptor {
                continue;
            }
            let du = f64::from(a.origin.0) - f64::from(b.origin.0);
            let dv = f64::from(a.origin.1) - f64::from(b.origin.1);
            if (du * du + dv * dv).sqrt() >= min_offset {
                let p = MatchPair::canonical(a.origin, b.origin);
                out.insert((p.source, p.target));
            }
        }
    }
    out
}

pub fn pixel_f1(predicted: &BinaryMask, truth: &BinaryMask) -> f64 {
    let tp = predicted
        .bits()
        .iter()
        .zip(truth.bits())
        .filter(|(&p, &t)| p && t)
        .count() as f64;
    let denom = (predicted.count() + truth.count()) as f64;
    if denom == 0.0 {
        1.0
    } else {
        2.0 * tp / denom
    }
}

pub const CORPUS_SEED: u64 = 2024;
pub const CORPUS_BASES: usize = 5;
pub const CORPUS_SIZE: u32 = 256;

pub fn feather() -> Blend {
    Blend::GaussianFeather { sigma: 2.0, band: 4 }
}

/// The seeded desk-scale corpus: `n` forgeries over five 256x256 textures.
pub fn desk_corpus(blend: Blend, n: usize) -> (Vec<GrayImage>, Vec<Sample>) {
    let bases = base_images(CORPUS_BASES, CORPUS_SIZE, CORPUS_SIZE, CORPUS_SEED).unwrap();
    let samples = corpus(&bases, n, &SpecDistribution::with_blend(blend), CORPUS_SEED).unwrap();
    (bases, samples)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs the CLI in-process; returns exit code, stdout and stderr.
pub fn run_in_process(args: &[&str]) -> (i32, Vec<u8>, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["copymove-lbp"];
    full.extend_from_slice(args);
    let code = copymove_lbp::cli::run(full, &mut out, &mut err);
    (code, out, String::from_utf8_lossy(&err).into_owned())
}

/// Runs `args` (with `{out}` replaced by a fresh directory) on `threads`
/// workers and returns stdout plus every file written, in path order.
pub fn capture(args: &[String], threads: &str) -> Vec<(String, Vec<u8>)> {
    let out_dir = tempfile::tempdir().unwrap();
    let args: Vec<String> = args.iter().map(|a| a.replace("{out}", s(out_dir.path()))).collect();
    let mut full: Vec<&str> = vec!["--threads", threads];
    full.extend(args.iter().map(String::as_str));
    let (code, stdout, err) = run_in_process(&full);
    assert_eq!(code, 0, "{args:?}: {err}");
    let mut files = vec![("<stdout>".to_string(), stdout)];
    let mut stack = vec![out_dir.path().to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(out_dir.path()).unwrap().display().to_string();
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

/// One invocation of every subcommand against a corpus at `root`, with
/// `{out}` standing for a scratch output directory.
pub fn subcommand_cases(root: &Path) -> Vec<Vec<String>> {
    let img = root.join("images/000.png");
    let mask = root.join("masks/000.png");
    [
        vec!["lbp", "--image", s(&img), "--radius", "2", "--out", "{out}/lbp.png", "--json"],
        vec!["detect", "--image", s(&img), "--out-dir", "{out}", "--json"],
        vec![
            "discriminate", "--image", s(&img), "--mask", s(&mask), "--overlay", "{out}/overlay.png",
            "--dump-dir", "{out}/dump", "--json",
        ],
        vec!["synth", "--out-dir", "{out}", "--n", "4", "--bases", "2", "--size", "160", "--seed", "9", "--json"],
        vec!["eval", "--root", s(root), "--out-dir", "{out}", "--json"],
        vec!["eval", "--root", s(root), "--mode", "detected_mask", "--json"],
    ]
    .iter()
    .map(|c| c.iter().map(|a| a.to_string()).collect())
    .collect()
}
