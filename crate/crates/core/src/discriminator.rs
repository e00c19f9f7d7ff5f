//! Original-vs-duplicate discrimination.
//!
//! For each LBP radius the codes inside each region's boundary band are
//! histogrammed and the sample standard deviation of the normalized bins is
//! taken. Smoothing a pasted contour flattens its LBP histogram, so the
//! region with the clearly smaller deviation gets that radius' vote. A
//! region is declared duplicated when a majority of radii vote for it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lbp::{compute_lbp, LbpConfig, LbpMap};
use crate::raster::{ensure_same_dims, BinaryMask, GrayImage};
use crate::region::{boundary_band, pair_from_mask, RegionPair, DEFAULT_MIN_AREA};

pub const DEFAULT_RADII: [f64; 3] = [2.0, 3.0, 4.0];
pub const DEFAULT_NEIGHBORS: u32 = 8;
pub const DEFAULT_BAND_WIDTH: u32 = 4;
/// Deviations closer than this are treated as equal.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorConfig {
    pub radii: Vec<f64>,
    pub neighbors: u32,
    /// Half-width of the boundary band, in pixels.
    pub band_width: u32,
    pub tie_tolerance: f64,
    /// Mask components smaller than this are ignored.
    pub min_area: usize,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self {
            radii: DEFAULT_RADII.to_vec(),
            neighbors: DEFAULT_NEIGHBORS,
            band_width: DEFAULT_BAND_WIDTH,
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
            min_area: DEFAULT_MIN_AREA,
        }
    }
}

impl DiscriminatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::InvalidConfig("at least one radius is required".into()));
        }
        for &r in &self.radii {
            LbpConfig::new(self.neighbors, r)?;
        }
        if self.band_width == 0 {
            return Err(Error::InvalidConfig("band width must be >= 1".into()));
        }
        if self.tie_tolerance.is_nan() || self.tie_tolerance < 0.0 {
            return Err(Error::InvalidConfig("tie tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

/// Occurrence counts of LBP codes over a band.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LbpHistogram {
    bins: Vec<u64>,
    total: u64,
}

impl LbpHistogram {
    pub fn from_counts(bins: Vec<u64>) -> Result<Self> {
        let total: u64 = bins.iter().sum();
        if total == 0 || bins.is_empty() {
            return Err(Error::InvalidConfig("histogram must hold at least one sample".into()));
        }
        Ok(Self { bins, total })
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn normalized(&self) -> Vec<f64> {
        let t = self.total as f64;
        self.bins.iter().map(|&c| c as f64 / t).collect()
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> LbpHistogram {
        LbpHistogram {
            bins: self.bins.iter().map(|&c| c * factor).collect(),
            total: self.total * factor,
        }
    }
}

/// Histogram of the codes under `band`. Every band pixel must be inside the
/// valid domain of `lbp`.
pub fn band_histogram(lbp: &LbpMap, band: &crate::region::BoundaryBand) -> Result<LbpHistogram> {
    if band.is_empty() {
        return Err(Error::EmptyBand {
            label: band.owner(),
        });
    }
    let mut bins = vec![0u64; 1usize << lbp.neighbors()];
    for &(u, v) in band.pixels() {
        let code = lbp.code(u, v).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "band pixel ({u}, {v}) lies in the LBP margin of {}",
                lbp.margin()
            ))
        })?;
        bins[code as usize] += 1;
    }
    LbpHistogram::from_counts(bins)
}

/// Sample standard deviation (n - 1 denominator) of the normalized bin
/// frequencies, taken over all `n` bins.
pub fn hist_std(h: &LbpHistogram) -> f64 {
    let q = h.normalized();
    let n = q.len() as f64;
    if q.len() < 2 {
        return 0.0;
    }
    let mean = q.iter().sum::<f64>() / n;
    let ss: f64 = q.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vote {
    #[serde(rename = "A_forged")]
    AForged,
    #[serde(rename = "B_forged")]
    BForged,
    #[serde(rename = "abstain")]
    Abstain,
}

impl Vote {
    pub fn mirrored(self) -> Vote {
        match self {
            Vote::AForged => Vote::BForged,
            Vote::BForged => Vote::AForged,
            Vote::Abstain => Vote::Abstain,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FinalLabel {
    #[serde(rename = "A_forged")]
    AForged,
    #[serde(rename = "B_forged")]
    BForged,
    #[serde(rename = "undecided")]
    Undecided,
}

impl FinalLabel {
    pub fn mirrored(self) -> FinalLabel {
        match self {
            FinalLabel::AForged => FinalLabel::BForged,
            FinalLabel::BForged => FinalLabel::AForged,
            FinalLabel::Undecided => FinalLabel::Undecided,
        }
    }
}

/// The lower deviation wins, unless the two are within `tolerance`.
pub fn vote_from_stds(std_a: f64, std_b: f64, tolerance: f64) -> Vote {
    if std_a < std_b - tolerance {
        Vote::AForged
    } else if std_b < std_a - tolerance {
        Vote::BForged
    } else {
        Vote::Abstain
    }
}

/// Strict-majority rule: with three radii, two concurring votes decide.
pub fn final_from_votes(votes: &[Vote]) -> FinalLabel {
    let needed = votes.len() / 2 + 1;
    let a = votes.iter().filter(|&&v| v == Vote::AForged).count();
    let b = votes.iter().filter(|&&v| v == Vote::BForged).count();
    if a >= needed {
        FinalLabel::AForged
    } else if b >= needed {
        FinalLabel::BForged
    } else {
        FinalLabel::Undecided
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusDecision {
    #[serde(rename = "R")]
    pub radius: f64,
    pub std_a: Option<f64>,
    pub std_b: Option<f64>,
    pub vote: Vote,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

impl RadiusDecision {
    fn abstain(radius: f64, std_a: Option<f64>, std_b: Option<f64>, reason: String) -> Self {
        RadiusDecision {
            radius,
            std_a,
            std_b,
            vote: Vote::Abstain,
            reason: Some(reason),
        }
    }

    pub fn mirrored(&self) -> RadiusDecision {
        RadiusDecision {
            radius: self.radius,
            std_a: self.std_b,
            std_b: self.std_a,
            vote: self.vote.mirrored(),
            reason: self.reason.clone(),
        }
    }
}

/// Serialized as `{final, per_radius, margin, band_width, P}` in that order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    #[serde(rename = "final")]
    pub final_label: FinalLabel,
    #[serde(rename = "per_radius")]
    pub decisions: Vec<RadiusDecision>,
    /// Sum over voting radii of (loser std - winner std). Diagnostic only.
    pub margin: f64,
    pub band_width: u32,
    #[serde(rename = "P")]
    pub neighbors: u32,
}

impl Verdict {
    pub fn from_decisions(decisions: Vec<RadiusDecision>, band_width: u32, neighbors: u32) -> Self {
        let votes: Vec<Vote> = decisions.iter().map(|d| d.vote).collect();
        let margin = decisions
            .iter()
            .filter(|d| d.vote != Vote::Abstain)
            .filter_map(|d| Some((d.std_a? - d.std_b?).abs()))
            .sum();
        Verdict {
            final_label: final_from_votes(&votes),
            decisions,
            margin,
            band_width,
            neighbors,
        }
    }

    pub fn votes(&self) -> Vec<Vote> {
        self.decisions.iter().map(|d| d.vote).collect()
    }

    /// The verdict for the same pair with `a` and `b` exchanged.
    pub fn mirrored(&self) -> Verdict {
        Verdict {
            final_label: self.final_label.mirrored(),
            decisions: self.decisions.iter().map(RadiusDecision::mirrored).collect(),
            margin: self.margin,
            band_width: self.band_width,
            neighbors: self.neighbors,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn decide_on_map(
    lbp: &LbpMap,
    radius: f64,
    pair: &RegionPair,
    mask: &BinaryMask,
    cfg: &DiscriminatorConfig,
) -> Result<RadiusDecision> {
    let clip = lbp.margin();
    let std_of = |region, other| -> Result<f64> {
        let band = boundary_band(region, mask, Some(other), cfg.band_width, clip)?;
        Ok(hist_std(&band_histogram(lbp, &band)?))
    };
    // an empty band becomes an abstention reason; anything else is fatal
    let soften = |r: Result<f64>| match r {
        Ok(s) => Ok(Ok(s)),
        Err(Error::EmptyBand { label }) => Ok(Err(format!("EmptyBand(region {label})"))),
        Err(e) => Err(e),
    };
    let std_a = soften(std_of(&pair.a, &pair.b))?;
    let std_b = soften(std_of(&pair.b, &pair.a))?;
    Ok(match (std_a, std_b) {
        (Ok(a), Ok(b)) => RadiusDecision {
            radius,
            std_a: Some(a),
            std_b: Some(b),
            vote: vote_from_stds(a, b, cfg.tie_tolerance),
            reason: None,
        },
        (a, b) => {
            let reason = [a.as_ref().err(), b.as_ref().err()]
                .into_iter()
                .flatten()
                .cloned()
                .collect::<Vec<_>>()
                .join("; ");
            RadiusDecision::abstain(radius, a.ok(), b.ok(), reason)
        }
    })
}

/// One radius' vote. An empty band abstains (with a reason) rather than
/// failing.
pub fn decide_radius(
    img: &GrayImage,
    pair: &RegionPair,
    mask: &BinaryMask,
    radius: f64,
    cfg: &DiscriminatorConfig,
) -> Result<RadiusDecision> {
    ensure_same_dims(img.dimensions(), mask.dimensions())?;
    let lbp = compute_lbp(img, &LbpConfig::new(cfg.neighbors, radius)?)?;
    decide_on_map(&lbp, radius, pair, mask, cfg)
}

/// Votes every configured radius on an explicit pair. Radii run in
/// parallel; results keep the configured order.
pub fn discriminate_pair(
    img: &GrayImage,
    mask: &BinaryMask,
    pair: &RegionPair,
    cfg: &DiscriminatorConfig,
) -> Result<Verdict> {
    cfg.validate()?;
    ensure_same_dims(img.dimensions(), mask.dimensions())?;
    let decisions = cfg
        .radii
        .par_iter()
        .map(|&r| decide_radius(img, pair, mask, r, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Verdict::from_decisions(decisions, cfg.band_width, cfg.neighbors))
}

/// Full discrimination from a mask: the two largest components form the
/// pair (`a` the larger) and every radius votes.
pub fn discriminate(img: &GrayImage, mask: &BinaryMask, cfg: &DiscriminatorConfig) -> Result<Verdict> {
    cfg.validate()?;
    ensure_same_dims(img.dimensions(), mask.dimensions())?;
    let pair = pair_from_mask(mask, cfg.min_area)?;
    discriminate_pair(img, mask, &pair, cfg)
}
