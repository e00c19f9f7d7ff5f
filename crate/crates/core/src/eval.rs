//! Dataset ingestion and accuracy reporting.
//!
//! Both supported layouts share one directory shape:
//!
//! ```text
//! root/images/ID.{png,pgm,ppm}
//! root/masks/ID.{png,pgm}
//! root/truth/ID.json      {"pasted_centroid": [u, v], ...}
//! ```
//!
//! Synth-style roots (written by [`crate::synth::write_corpus`]) always carry
//! truth files; grip-style roots may omit some, and those entries are skipped
//! at evaluation time. The truth file names the pasted component by its
//! centroid, which is matched against the components of the ground-truth
//! mask.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{detect, DetectorParams};
use crate::discriminator::{discriminate_pair, DiscriminatorConfig, FinalLabel, Verdict, Vote};
use crate::error::{Error, Result};
use crate::raster::{read_gray, read_mask, BinaryMask, GrayImage};
use crate::region::{connected_components, pair_from_mask, Region, RegionPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    GripStyle,
    SynthStyle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    GroundTruthMask,
    DetectedMask,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetEntry {
    pub id: String,
    pub image: PathBuf,
    pub mask: PathBuf,
    pub truth: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SkipRecord {
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    /// Usable entries, sorted by id.
    pub entries: Vec<DatasetEntry>,
    /// Entries rejected at ingestion, sorted by id.
    pub skipped: Vec<SkipRecord>,
}

impl Dataset {
    pub fn size(&self) -> usize {
        self.entries.len() + self.skipped.len()
    }
}

const IMAGE_EXTS: [&str; 3] = ["png", "pgm", "ppm"];
const MASK_EXTS: [&str; 2] = ["png", "pgm"];

fn find_with_ext(dir: &Path, id: &str, exts: &[&str]) -> Option<PathBuf> {
    exts.iter()
        .map(|e| dir.join(format!("{id}.{e}")))
        .find(|p| p.is_file())
}

fn dims_of(path: &Path) -> Result<(u32, u32)> {
    Ok(crate::raster::read_image(path)?.dimensions())
}

/// Lists `root/images` and pairs every image with its mask and truth file.
pub fn ingest(root: &Path, layout: Layout) -> Result<Dataset> {
    let layout_err = |reason: &str| Error::LayoutError {
        path: root.to_path_buf(),
        reason: reason.to_string(),
    };
    let images_dir = root.join("images");
    if !images_dir.is_dir() {
        return Err(layout_err("missing images/ directory"));
    }
    let mut ids: Vec<String> = std::fs::read_dir(&images_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .filter_map(|p| p.file_stem().and_then(|s| s.to_str()).map(str::to_owned))
        .collect();
    ids.sort();
    ids.dedup();
    if ids.is_empty() {
        return Err(layout_err("no images found"));
    }

    let mut ds = Dataset::default();
    for id in ids {
        let image = find_with_ext(&images_dir, &id, &IMAGE_EXTS).expect("listed above");
        let skip = |reason: String| SkipRecord {
            id: id.clone(),
            reason,
        };
        let Some(mask) = find_with_ext(&root.join("masks"), &id, &MASK_EXTS) else {
            ds.skipped.push(skip("MissingMask".into()));
            continue;
        };
        let truth = Some(root.join("truth").join(format!("{id}.json"))).filter(|p| p.is_file());
        if layout == Layout::SynthStyle && truth.is_none() {
            ds.skipped.push(skip("MissingTruth".into()));
            continue;
        }
        match (dims_of(&image), dims_of(&mask)) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(a), Ok(b)) => {
                ds.skipped.push(skip(format!(
                    "DimensionMismatch: image {}x{}, mask {}x{}",
                    a.0, a.1, b.0, b.1
                )));
                continue;
            }
            (Err(e), _) | (_, Err(e)) => {
                ds.skipped.push(skip(format!("Unreadable: {e}")));
                continue;
            }
        }
        ds.entries.push(DatasetEntry {
            id,
            image,
            mask,
            truth,
        });
    }
    Ok(ds)
}

/// The part of a truth file evaluation needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRef {
    pub pasted_centroid: (f64, f64),
    #[serde(default)]
    pub source_centroid: Option<(f64, f64)>,
}

impl TruthRef {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Which side of `pair` is the pasted region: the one overlapping the
/// ground-truth component nearest to the pasted centroid the most.
pub fn pasted_side(pair: &RegionPair, truth_mask: &BinaryMask, truth: &TruthRef) -> Option<Side> {
    let comps = connected_components(truth_mask, 1);
    let dist2 = |r: &Region| {
        let (u, v) = r.centroid();
        let (pu, pv) = truth.pasted_centroid;
        (u - pu).powi(2) + (v - pv).powi(2)
    };
    let pasted = comps
        .iter()
        .min_by(|x, y| dist2(x).total_cmp(&dist2(y)))?;
    let overlap = |r: &Region| r.pixels().iter().filter(|&&p| pasted.contains(p)).count();
    let (oa, ob) = (overlap(&pair.a), overlap(&pair.b));
    match oa.cmp(&ob) {
        std::cmp::Ordering::Greater => Some(Side::A),
        std::cmp::Ordering::Less => Some(Side::B),
        std::cmp::Ordering::Equal => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    fn vote(self) -> Vote {
        match self {
            Side::A => Vote::AForged,
            Side::B => Vote::BForged,
        }
    }

    fn label(self) -> FinalLabel {
        match self {
            Side::A => FinalLabel::AForged,
            Side::B => FinalLabel::BForged,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Incorrect,
    Undecided,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryRecord {
    pub id: String,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pasted: Option<Side>,
    /// Whether each radius' solo vote named the pasted region.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub radius_correct: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl EntryRecord {
    fn skipped(id: &str, reason: String) -> Self {
        EntryRecord {
            id: id.to_string(),
            outcome: Outcome::Skipped,
            pasted: None,
            radius_correct: Vec::new(),
            verdict: None,
            reason: Some(reason),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub correct: usize,
    pub incorrect: usize,
    pub undecided: usize,
    pub skipped: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.correct + self.incorrect + self.undecided + self.skipped
    }

    /// Entries that reached a verdict (the accuracy denominator).
    pub fn scored(&self) -> usize {
        self.correct + self.incorrect + self.undecided
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusAccuracy {
    #[serde(rename = "R")]
    pub radius: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Accuracy {
    pub per_radius: Vec<RadiusAccuracy>,
    #[serde(rename = "final")]
    pub final_vote: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub radii: Vec<f64>,
    #[serde(rename = "P")]
    pub neighbors: u32,
    pub band_width: u32,
    pub tie_tolerance: f64,
    pub min_area: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: Mode,
    pub dataset_size: usize,
    pub counts: Counts,
    pub accuracy: Accuracy,
    pub config: ConfigEcho,
    pub entries: Vec<EntryRecord>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Human-readable accuracy table: one column per radius plus the vote.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let mut header = format!("{:<18}", "");
        for r in &self.accuracy.per_radius {
            let _ = write!(header, "{:>9}", format!("R={}", r.radius));
        }
        let _ = writeln!(out, "{header}{:>9}", "Final");
        let name = match self.mode {
            Mode::GroundTruthMask => "ground-truth mask",
            Mode::DetectedMask => "detected mask",
        };
        let mut row = format!("{name:<18}");
        for r in &self.accuracy.per_radius {
            let _ = write!(row, "{:>8.1}%", 100.0 * r.accuracy);
        }
        let _ = writeln!(out, "{row}{:>8.1}%", 100.0 * self.accuracy.final_vote);
        let c = &self.counts;
        let _ = writeln!(
            out,
            "entries {}: correct {}, incorrect {}, undecided {}, skipped {}",
            self.dataset_size, c.correct, c.incorrect, c.undecided, c.skipped
        );
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalConfig {
    pub discriminator: DiscriminatorConfig,
    pub detector: DetectorParams,
}

/// Produces the mask analysed in detected-mask mode.
pub trait MaskSource: Sync {
    fn mask_for(&self, img: &GrayImage) -> Result<BinaryMask>;
}

/// The block-DCT detector as a mask source.
pub struct BlockDetector(pub DetectorParams);

impl MaskSource for BlockDetector {
    fn mask_for(&self, img: &GrayImage) -> Result<BinaryMask> {
        Ok(detect(img, &self.0)?.mask)
    }
}

fn evaluate_entry(
    entry: &DatasetEntry,
    mode: Mode,
    cfg: &EvalConfig,
    detector: &dyn MaskSource,
) -> Result<EntryRecord> {
    let Some(truth_path) = &entry.truth else {
        return Ok(EntryRecord::skipped(&entry.id, "MissingTruth".into()));
    };
    let truth = TruthRef::read(truth_path)?;
    let img = read_gray(&entry.image)?;
    let truth_mask = read_mask(&entry.mask)?;
    let mask = match mode {
        Mode::GroundTruthMask => truth_mask.clone(),
        Mode::DetectedMask => detector.mask_for(&img)?,
    };
    let pair = pair_from_mask(&mask, cfg.discriminator.min_area)?;
    let Some(pasted) = pasted_side(&pair, &truth_mask, &truth) else {
        return Ok(EntryRecord::skipped(
            &entry.id,
            "UnmatchedRegions: analysed pair does not identify the pasted region".into(),
        ));
    };
    let verdict = discriminate_pair(&img, &mask, &pair, &cfg.discriminator)?;
    let radius_correct = verdict.votes().iter().map(|&v| v == pasted.vote()).collect();
    let outcome = match verdict.final_label {
        FinalLabel::Undecided => Outcome::Undecided,
        l if l == pasted.label() => Outcome::Correct,
        _ => Outcome::Incorrect,
    };
    Ok(EntryRecord {
        id: entry.id.clone(),
        outcome,
        pasted: Some(pasted),
        radius_correct,
        verdict: Some(verdict),
        reason: None,
    })
}

/// Scores the dataset with an explicit mask source for detected-mask mode.
/// Ground-truth mode never calls `detector`.
pub fn evaluate_with(
    dataset: &Dataset,
    mode: Mode,
    cfg: &EvalConfig,
    detector: &dyn MaskSource,
) -> Result<EvalReport> {
    cfg.discriminator.validate()?;
    if mode == Mode::DetectedMask {
        cfg.detector.validate()?;
    }
    let mut entries: Vec<EntryRecord> = dataset
        .entries
        .par_iter()
        .map(|e| {
            evaluate_entry(e, mode, cfg, detector)
                .unwrap_or_else(|err| EntryRecord::skipped(&e.id, err.to_string()))
        })
        .collect();
    entries.extend(
        dataset
            .skipped
            .iter()
            .map(|s| EntryRecord::skipped(&s.id, s.reason.clone())),
    );
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(aggregate(mode, entries, cfg))
}

pub fn evaluate(dataset: &Dataset, mode: Mode, cfg: &EvalConfig) -> Result<EvalReport> {
    evaluate_with(dataset, mode, cfg, &BlockDetector(cfg.detector.clone()))
}

/// Tallies records into a report. Undecided counts against accuracy;
/// skipped entries leave the denominator.
pub fn aggregate(mode: Mode, entries: Vec<EntryRecord>, cfg: &EvalConfig) -> EvalReport {
    let mut counts = Counts::default();
    for e in &entries {
        match e.outcome {
            Outcome::Correct => counts.correct += 1,
            Outcome::Incorrect => counts.incorrect += 1,
            Outcome::Undecided => counts.undecided += 1,
            Outcome::Skipped => counts.skipped += 1,
        }
    }
    let denom = counts.scored();
    let frac = |k: usize| if denom == 0 { 0.0 } else { k as f64 / denom as f64 };
    let per_radius = cfg
        .discriminator
        .radii
        .iter()
        .enumerate()
        .map(|(i, &radius)| RadiusAccuracy {
            radius,
            accuracy: frac(
                entries
                    .iter()
                    .filter(|e| e.radius_correct.get(i).copied().unwrap_or(false))
                    .count(),
            ),
        })
        .collect();
    let d = &cfg.discriminator;
    EvalReport {
        mode,
        dataset_size: entries.len(),
        accuracy: Accuracy {
            per_radius,
            final_vote: frac(counts.correct),
        },
        counts,
        config: ConfigEcho {
            radii: d.radii.clone(),
            neighbors: d.neighbors,
            band_width: d.band_width,
            tie_tolerance: d.tie_tolerance,
            min_area: d.min_area,
            detector: (mode == Mode::DetectedMask).then(|| cfg.detector.clone()),
        },
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, outcome: Outcome, radius_correct: Vec<bool>) -> EntryRecord {
        EntryRecord {
            id: id.into(),
            outcome,
            pasted: Some(Side::A),
            radius_correct,
            verdict: None,
            reason: None,
        }
    }

    #[test]
    fn aggregate_counts_and_accuracy() {
        let cfg = EvalConfig::default();
        let entries = vec![
            record("a", Outcome::Correct, vec![true, true, false]),
            record("b", Outcome::Incorrect, vec![false, false, true]),
            record("c", Outcome::Undecided, vec![true, false, false]),
            EntryRecord::skipped("d", "x".into()),
        ];
        let r = aggregate(Mode::GroundTruthMask, entries, &cfg);
        assert_eq!(r.counts.total(), r.dataset_size);
        assert_eq!(r.counts.skipped, 1);
        assert!((r.accuracy.final_vote - 1.0 / 3.0).abs() < 1e-15);
        let acc: Vec<f64> = r.accuracy.per_radius.iter().map(|a| a.accuracy).collect();
        assert_eq!(acc, vec![2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert!(r.table().contains("R=2"));
    }

    #[test]
    fn all_undecided_scores_zero() {
        let entries = (0..5)
            .map(|i| record(&i.to_string(), Outcome::Undecided, vec![false; 3]))
            .collect();
        let r = aggregate(Mode::GroundTruthMask, entries, &EvalConfig::default());
        assert_eq!(r.accuracy.final_vote, 0.0);
        assert_eq!(r.counts.undecided, 5);
    }

    #[test]
    fn empty_root_is_layout_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(ingest(dir.path(), Layout::SynthStyle), Err(Error::LayoutError { .. })));
        std::fs::create_dir(dir.path().join("images")).unwrap();
        assert!(matches!(ingest(dir.path(), Layout::SynthStyle), Err(Error::LayoutError { .. })));
    }
}
