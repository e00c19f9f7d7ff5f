//! Copy-move forgery analysis.
//!
//! Given a grayscale image and a mask holding a pair of duplicated regions,
//! [`discriminator::discriminate`] decides which region is the pasted copy by
//! comparing the spread of local binary pattern histograms taken on a band
//! around each region's contour, voting across several LBP radii.
//!
//! Supporting pieces:
//!
//! * [`raster`]: images, masks, PNG / PGM / PPM codecs.
//! * [`lbp`]: circular LBP code maps.
//! * [`region`]: connected components, morphology, boundary bands.
//! * [`detector`]: a block-DCT copy-move detector producing masks.
//! * [`synth`]: ground-truthed forgery generation with boundary feathering.
//! * [`eval`]: dataset ingestion and accuracy reports.

pub mod cli;
pub mod detector;
pub mod discriminator;
pub mod error;
pub mod eval;
pub mod lbp;
pub mod raster;
pub mod region;
pub mod synth;

pub use error::{Error, Result};
