//! Command-line front end. `run` is the whole program minus process exit,
//! so tests can drive it in-process.
//!
//! Exit status: 0 on success, 1 on usage errors (bad flags, invalid
//! parameter values), 2 on data errors (unreadable or unusable inputs).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::detector::{detect, DetectorParams};
use crate::discriminator::{
    discriminate_pair, DiscriminatorConfig, FinalLabel, DEFAULT_BAND_WIDTH, DEFAULT_NEIGHBORS,
    DEFAULT_TIE_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, ingest, EvalConfig, Layout, Mode};
use crate::lbp::{compute_lbp, LbpConfig};
use crate::raster::{encode_overlay, read_gray, read_mask, RegionRole};
use crate::region::{boundary_band, pair_from_mask, DEFAULT_MIN_AREA};
use crate::synth::{base_images, corpus, write_corpus, Blend, SpecDistribution};

#[derive(Parser, Debug)]
#[command(
    name = "copymove-lbp",
    version,
    about = "Copy-move forgery analysis: tell the pasted region from the original"
)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute an LBP code map and its histogram over the valid domain.
    Lbp(LbpArgs),
    /// Run the block-DCT copy-move detector.
    Detect(DetectArgs),
    /// Decide which region of a copy-move mask is the duplicate.
    Discriminate(DiscriminateArgs),
    /// Generate a ground-truthed synthetic forgery corpus.
    Synth(SynthArgs),
    /// Score the discriminator on a dataset.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct LbpArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    radius: f64,
    #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
    neighbors: u32,
    /// Write the code map as an 8-bit PNG (margin black).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug, Clone)]
struct DetectorFlags {
    #[arg(long, default_value_t = 16)]
    block_size: u32,
    #[arg(long, default_value_t = 16)]
    zigzag_count: usize,
    #[arg(long, default_value_t = 16.0)]
    quant: f64,
    #[arg(long, default_value_t = 5.0)]
    var_min: f64,
    #[arg(long, default_value_t = 4)]
    neighbor_window: usize,
    #[arg(long, default_value_t = 50)]
    min_support: usize,
}

impl DetectorFlags {
    fn params(&self) -> DetectorParams {
        DetectorParams {
            block_size: self.block_size,
            zigzag_count: self.zigzag_count,
            quant: self.quant,
            var_min: self.var_min,
            neighbor_window: self.neighbor_window,
            min_offset: None,
            min_support: self.min_support,
        }
    }
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[arg(long)]
    image: PathBuf,
    #[command(flatten)]
    detector: DetectorFlags,
    /// Directory receiving mask.png and detection.json.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug, Clone)]
struct DiscriminatorFlags {
    #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 3.0, 4.0])]
    radii: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
    neighbors: u32,
    #[arg(long, default_value_t = DEFAULT_BAND_WIDTH)]
    band_width: u32,
    #[arg(long, default_value_t = DEFAULT_TIE_TOLERANCE)]
    tie_tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_AREA)]
    min_area: usize,
}

impl DiscriminatorFlags {
    fn config(&self) -> DiscriminatorConfig {
        DiscriminatorConfig {
            radii: self.radii.clone(),
            neighbors: self.neighbors,
            band_width: self.band_width,
            tie_tolerance: self.tie_tolerance,
            min_area: self.min_area,
        }
    }
}

#[derive(Args, Debug)]
struct DiscriminateArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[command(flatten)]
    discriminator: DiscriminatorFlags,
    /// Write an RGB PNG with the duplicated region red and the original green.
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Write per-radius LBP maps and boundary bands as PNGs.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BlendKind {
    Feather,
    None,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Number of generated base textures (ignored when --base is given).
    #[arg(long, default_value_t = 5)]
    bases: usize,
    /// Side length of generated base textures.
    #[arg(long, default_value_t = 256)]
    size: u32,
    /// Use these images as bases instead of generated textures.
    #[arg(long)]
    base: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = BlendKind::Feather)]
    blend: BlendKind,
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, default_value_t = 4)]
    feather_band: u32,
    #[arg(long, default_value_t = 2000)]
    min_area: usize,
    #[arg(long, default_value_t = 6000)]
    max_area: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    #[value(name = "ground_truth_mask")]
    GroundTruthMask,
    #[value(name = "detected_mask")]
    DetectedMask,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LayoutArg {
    Grip,
    Synth,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    root: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::GroundTruthMask)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = LayoutArg::Synth)]
    layout: LayoutArg,
    #[command(flatten)]
    discriminator: DiscriminatorFlags,
    #[command(flatten)]
    detector: DetectorFlags,
    /// Also write report.json here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

/// Runs the CLI on `args` (including the program name), writing to the given
/// streams, and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };

    // stdout is buffered so the command can run inside a dedicated pool
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command, &mut buf)),
            Err(e) => Err(Error::InvalidConfig(e.to_string())),
        },
        None => dispatch(cli.command, &mut buf),
    };
    let result = result.and_then(|()| out.write_all(&buf).map_err(Error::from));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::InvalidConfig(_) => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Lbp(a) => cmd_lbp(a, out),
        Command::Detect(a) => cmd_detect(a, out),
        Command::Discriminate(a) => cmd_discriminate(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Eval(a) => cmd_eval(a, out),
    }
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct LbpSummary {
    width: u32,
    height: u32,
    #[serde(rename = "P")]
    neighbors: u32,
    #[serde(rename = "R")]
    radius: f64,
    margin: u32,
    valid_pixels: u64,
    histogram: Vec<u64>,
}

fn cmd_lbp(a: LbpArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = LbpConfig::new(a.neighbors, a.radius)?;
    let img = read_gray(&a.image)?;
    let map = compute_lbp(&img, &cfg)?;
    let mut histogram = vec![0u64; cfg.code_count()];
    for v in 0..map.height() {
        for u in 0..map.width() {
            if let Some(c) = map.code(u, v) {
                histogram[c as usize] += 1;
            }
        }
    }
    if let Some(path) = &a.out {
        std::fs::write(path, map.to_gray().to_png()?)?;
    }
    let summary = LbpSummary {
        width: map.width(),
        height: map.height(),
        neighbors: cfg.neighbors(),
        radius: cfg.radius(),
        margin: map.margin(),
        valid_pixels: histogram.iter().sum(),
        histogram,
    };
    if a.json {
        emit_json(out, &summary)
    } else {
        writeln!(
            out,
            "LBP P={} R={}: {}x{} image, {} valid pixels (margin {})",
            summary.neighbors, summary.radius, summary.width, summary.height, summary.valid_pixels, summary.margin
        )?;
        Ok(())
    }
}

fn cmd_detect(a: DetectArgs, out: &mut dyn Write) -> Result<()> {
    let params = a.detector.params();
    params.validate()?;
    let img = read_gray(&a.image)?;
    let result = detect(&img, &params)?;
    let sidecar = result.sidecar_json(&params)?;
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("mask.png"), result.mask.to_png()?)?;
        std::fs::write(dir.join("detection.json"), format!("{sidecar}\n"))?;
    }
    if a.json {
        writeln!(out, "{sidecar}")?;
    } else {
        writeln!(
            out,
            "{} surviving pairs, {} mask pixels",
            result.pairs.len(),
            result.mask.count()
        )?;
        for s in &result.dominant_shifts {
            writeln!(out, "  shift ({}, {}): support {}", s.du, s.dv, s.support)?;
        }
    }
    Ok(())
}

fn cmd_discriminate(a: DiscriminateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.discriminator.config();
    cfg.validate()?;
    let img = read_gray(&a.image)?;
    let mask = read_mask(&a.mask)?;
    crate::raster::ensure_same_dims(img.dimensions(), mask.dimensions())?;
    let pair = pair_from_mask(&mask, cfg.min_area)?;
    let verdict = discriminate_pair(&img, &mask, &pair, &cfg)?;

    if let Some(path) = &a.overlay {
        let roles: Vec<(RegionRole, &[_])> = match verdict.final_label {
            FinalLabel::AForged => vec![
                (RegionRole::Duplicated, pair.a.pixels()),
                (RegionRole::Original, pair.b.pixels()),
            ],
            FinalLabel::BForged => vec![
                (RegionRole::Original, pair.a.pixels()),
                (RegionRole::Duplicated, pair.b.pixels()),
            ],
            FinalLabel::Undecided => Vec::new(),
        };
        std::fs::write(path, encode_overlay(&img, &roles)?)?;
    }
    if let Some(dir) = &a.dump_dir {
        dump_debug(dir, &img, &mask, &pair, &cfg)?;
    }

    if a.json {
        emit_json(out, &verdict)
    } else {
        for (name, r) in [("A", &pair.a), ("B", &pair.b)] {
            let (cu, cv) = r.centroid();
            writeln!(out, "region {name}: {} px, centroid ({cu:.1}, {cv:.1})", r.area())?;
        }
        for d in &verdict.decisions {
            let fmt = |s: Option<f64>| s.map_or("-".to_string(), |s| format!("{s:.6}"));
            write!(
                out,
                "R={}: std_a {} std_b {} -> {:?}",
                d.radius,
                fmt(d.std_a),
                fmt(d.std_b),
                d.vote
            )?;
            match &d.reason {
                Some(r) => writeln!(out, " ({r})")?,
                None => writeln!(out)?,
            }
        }
        writeln!(out, "final: {:?}", verdict.final_label)?;
        Ok(())
    }
}

fn dump_debug(
    dir: &Path,
    img: &crate::raster::GrayImage,
    mask: &crate::raster::BinaryMask,
    pair: &crate::region::RegionPair,
    cfg: &DiscriminatorConfig,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (w, h) = img.dimensions();
    for &r in &cfg.radii {
        let lbp_cfg = LbpConfig::new(cfg.neighbors, r)?;
        let map = compute_lbp(img, &lbp_cfg)?;
        std::fs::write(dir.join(format!("lbp_R{r}.png")), map.to_gray().to_png()?)?;
        for (name, region, other) in [("a", &pair.a, &pair.b), ("b", &pair.b, &pair.a)] {
            if let Ok(band) = boundary_band(region, mask, Some(other), cfg.band_width, lbp_cfg.margin()) {
                let band_mask = crate::raster::BinaryMask::from_points(w, h, band.pixels())?;
                std::fs::write(dir.join(format!("band_{name}_R{r}.png")), band_mask.to_png()?)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SynthSummary {
    n: usize,
    seed: u64,
    bases: usize,
    ids: Vec<String>,
    distribution: SpecDistribution,
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    if a.min_area == 0 || a.min_area > a.max_area {
        return Err(Error::InvalidConfig(format!(
            "area range {}..={} is empty",
            a.min_area, a.max_area
        )));
    }
    let bases = if a.base.is_empty() {
        base_images(a.bases, a.size, a.size, a.seed)?
    } else {
        a.base.iter().map(|p| read_gray(p)).collect::<Result<Vec<_>>>()?
    };
    let blend = match a.blend {
        BlendKind::None => Blend::None,
        BlendKind::Feather => Blend::GaussianFeather {
            sigma: a.sigma,
            band: a.feather_band,
        },
    };
    let dist = SpecDistribution {
        area: (a.min_area, a.max_area),
        blend,
        gap_band: a.feather_band,
        ..SpecDistribution::default()
    };
    let samples = corpus(&bases, a.n, &dist, a.seed)?;
    write_corpus(&a.out_dir, &samples)?;
    let summary = SynthSummary {
        n: samples.len(),
        seed: a.seed,
        bases: bases.len(),
        ids: samples.iter().map(|s| s.id.clone()).collect(),
        distribution: dist,
    };
    if a.json {
        emit_json(out, &summary)
    } else {
        writeln!(
            out,
            "wrote {} forgeries over {} base images to {}",
            summary.n,
            summary.bases,
            a.out_dir.display()
        )?;
        Ok(())
    }
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = EvalConfig {
        discriminator: a.discriminator.config(),
        detector: a.detector.params(),
    };
    cfg.discriminator.validate()?;
    let layout = match a.layout {
        LayoutArg::Grip => Layout::GripStyle,
        LayoutArg::Synth => Layout::SynthStyle,
    };
    let mode = match a.mode {
        ModeArg::GroundTruthMask => Mode::GroundTruthMask,
        ModeArg::DetectedMask => Mode::DetectedMask,
    };
    let dataset = ingest(&a.root, layout)?;
    let report = evaluate(&dataset, mode, &cfg)?;
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), report.to_json()? + "\n")?;
    }
    if a.json {
        writeln!(out, "{}", report.to_json()?)?;
    } else {
        write!(out, "{}", report.table())?;
    }
    Ok(())
}
