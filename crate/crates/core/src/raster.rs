//! Rasters shared by every stage: 8-bit grayscale and RGB images, binary
//! masks, and their PNG / binary PNM codecs.
//!
//! Coordinates are `(u, v)` = (column, row) throughout the crate, with the
//! origin at the top-left pixel and data stored row-major.

use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

/// A pixel coordinate, `(u, v)` = (column, row).
pub type Point = (u32, u32);

fn check_dims(width: u32, height: u32) -> Result<usize> {
    if width == 0 || height == 0 {
        return Err(Error::MalformedImage(format!(
            "zero-sized raster {width}x{height}"
        )));
    }
    (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| Error::MalformedImage(format!("raster {width}x{height} overflows")))
}

/// 8-bit single-channel raster.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let len = check_dims(width, height)?;
        if data.len() != len {
            return Err(Error::MalformedImage(format!(
                "expected {len} samples for {width}x{height}, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        let len = check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![value; len],
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Result<Self> {
        let len = check_dims(width, height)?;
        let mut data = Vec::with_capacity(len);
        for v in 0..height {
            for u in 0..width {
                data.push(f(u, v));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> u8 {
        self.data[v as usize * self.width as usize + u as usize]
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, value: u8) {
        let w = self.width as usize;
        self.data[v as usize * w + u as usize] = value;
    }

    pub fn row(&self, v: u32) -> &[u8] {
        let w = self.width as usize;
        &self.data[v as usize * w..(v as usize + 1) * w]
    }

    pub fn min_max(&self) -> (u8, u8) {
        self.data
            .iter()
            .fold((u8::MAX, u8::MIN), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }

    /// Adds a constant to every intensity, refusing offsets that would clip.
    pub fn offset(&self, offset: i32) -> Result<GrayImage> {
        let (lo, hi) = self.min_max();
        if i32::from(hi) + offset > 255 || i32::from(lo) + offset < 0 {
            return Err(Error::OffsetWouldClip { offset });
        }
        let data = self
            .data
            .iter()
            .map(|&x| (i32::from(x) + offset) as u8)
            .collect();
        Ok(GrayImage {
            width: self.width,
            height: self.height,
            data,
        })
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        encode_png(self.width, self.height, png::ColorType::Grayscale, &self.data)
    }
}

/// 8-bit interleaved RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let len = check_dims(width, height)?
            .checked_mul(3)
            .ok_or_else(|| Error::MalformedImage("raster overflows".into()))?;
        if data.len() != len {
            return Err(Error::MalformedImage(format!(
                "expected {len} samples for {width}x{height} RGB, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, u: u32, v: u32) -> [u8; 3] {
        let i = 3 * (v as usize * self.width as usize + u as usize);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        encode_png(self.width, self.height, png::ColorType::Rgb, &self.data)
    }
}

/// Row-major boolean raster; `true` marks a copy-move pixel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        let len = check_dims(width, height)?;
        if bits.len() != len {
            return Err(Error::MalformedImage(format!(
                "expected {len} mask bits for {width}x{height}, got {}",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: u32, height: u32) -> Result<Self> {
        let len = check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            bits: vec![false; len],
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        let mut mask = Self::empty(width, height)?;
        for v in 0..height {
            for u in 0..width {
                if f(u, v) {
                    mask.set(u, v, true);
                }
            }
        }
        Ok(mask)
    }

    pub fn from_points(width: u32, height: u32, points: &[Point]) -> Result<Self> {
        let mut mask = Self::empty(width, height)?;
        for &(u, v) in points {
            if u >= width || v >= height {
                return Err(Error::DimensionMismatch {
                    expected: (width, height),
                    actual: (u + 1, v + 1),
                });
            }
            mask.set(u, v, true);
        }
        Ok(mask)
    }

    /// Binarizes a grayscale raster: intensity > 127 is marked.
    pub fn from_gray(img: &GrayImage) -> Self {
        BinaryMask {
            width: img.width(),
            height: img.height(),
            bits: img.data().iter().map(|&x| x > 127).collect(),
        }
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> bool {
        self.bits[v as usize * self.width as usize + u as usize]
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, value: bool) {
        let w = self.width as usize;
        self.bits[v as usize * w + u as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Marked pixels in raster order.
    pub fn points(&self) -> Vec<Point> {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| ((i % w) as u32, (i / w) as u32))
            .collect()
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        ensure_same_dims(self.dimensions(), other.dimensions())?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a || b)
                .collect(),
        })
    }

    /// 0 / 255 grayscale rendering.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        self.to_gray().to_png()
    }
}

pub(crate) fn ensure_same_dims(expected: (u32, u32), actual: (u32, u32)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Result of decoding an arbitrary supported image stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodedImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl DecodedImage {
    pub fn dimensions(&self) -> (u32, u32) {
        match self {
            DecodedImage::Gray(g) => g.dimensions(),
            DecodedImage::Rgb(c) => (c.width(), c.height()),
        }
    }

    pub fn into_gray(self) -> GrayImage {
        match self {
            DecodedImage::Gray(g) => g,
            DecodedImage::Rgb(c) => to_grayscale(&c),
        }
    }
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Decodes an 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette) or a binary
/// PGM (`P5`) / PPM (`P6`) stream. Alpha is discarded. 16-bit samples are
/// rejected.
pub fn decode_image(bytes: &[u8]) -> Result<DecodedImage> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        return decode_png(bytes);
    }
    match bytes {
        [b'P', b'5', ..] => decode_pnm(bytes, 1),
        [b'P', b'6', ..] => decode_pnm(bytes, 3),
        [b'P', b'1'..=b'4' | b'7', ..] => Err(Error::UnsupportedFormat(
            "only binary PGM (P5) and PPM (P6) are supported".into(),
        )),
        [] => Err(Error::MalformedImage("empty input".into())),
        _ => Err(Error::UnsupportedFormat(
            "not a PNG, PGM or PPM stream".into(),
        )),
    }
}

fn decode_png(bytes: &[u8]) -> Result<DecodedImage> {
    let malformed = |e: png::DecodingError| Error::MalformedImage(format!("png: {e}"));
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(malformed)?;
    if reader.info().bit_depth == png::BitDepth::Sixteen {
        return Err(Error::UnsupportedFormat("16-bit PNG".into()));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::MalformedImage("png: image too large".into()))?;
    let mut buf = vec![0u8; size];
    let out = reader.next_frame(&mut buf).map_err(malformed)?;
    if out.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "PNG output depth {:?}",
            out.bit_depth
        )));
    }
    let (w, h) = (out.width, out.height);
    let npix = w as usize * h as usize;
    let channels = out.color_type.samples();
    let mut packed = Vec::with_capacity(npix * channels);
    for row in buf.chunks(out.line_size).take(h as usize) {
        packed.extend_from_slice(&row[..w as usize * channels]);
    }
    match out.color_type {
        png::ColorType::Grayscale => Ok(DecodedImage::Gray(GrayImage::new(w, h, packed)?)),
        png::ColorType::GrayscaleAlpha => Ok(DecodedImage::Gray(GrayImage::new(
            w,
            h,
            packed.chunks_exact(2).map(|p| p[0]).collect(),
        )?)),
        png::ColorType::Rgb => Ok(DecodedImage::Rgb(RgbImage::new(w, h, packed)?)),
        png::ColorType::Rgba => Ok(DecodedImage::Rgb(RgbImage::new(
            w,
            h,
            packed
                .chunks_exact(4)
                .flat_map(|p| [p[0], p[1], p[2]])
                .collect(),
        )?)),
        png::ColorType::Indexed => Err(Error::UnsupportedFormat(
            "unexpanded palette PNG".into(),
        )),
    }
}

/// Splits a PNM header into its whitespace-separated fields, skipping `#`
/// comments, and returns the offset of the first payload byte.
fn pnm_header(bytes: &[u8]) -> Result<([u32; 3], usize)> {
    let mut fields = [0u32; 3];
    let mut pos = 2;
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(Error::MalformedImage("truncated PNM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::MalformedImage("non-numeric PNM header field".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedImage("PNM header field out of range".into()))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => Ok((fields, pos + 1)),
        _ => Err(Error::MalformedImage("missing PNM header terminator".into())),
    }
}

fn decode_pnm(bytes: &[u8], channels: usize) -> Result<DecodedImage> {
    let ([w, h, maxval], offset) = pnm_header(bytes)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedImage(format!("PNM maxval {maxval}")));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedFormat("16-bit PNM".into()));
    }
    let len = check_dims(w, h)? * channels;
    let payload = &bytes[offset..];
    if payload.len() < len {
        return Err(Error::MalformedImage(format!(
            "PNM payload truncated: {} of {len} bytes",
            payload.len()
        )));
    }
    let data = payload[..len].to_vec();
    if channels == 1 {
        Ok(DecodedImage::Gray(GrayImage::new(w, h, data)?))
    } else {
        Ok(DecodedImage::Rgb(RgbImage::new(w, h, data)?))
    }
}

/// Luma conversion `round(0.299 R + 0.587 G + 0.114 B)`, ties rounded up.
///
/// Evaluated in integer arithmetic on weights scaled by 1000 so the result
/// is exact and platform independent.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| {
            let acc = 299 * u32::from(p[0]) + 587 * u32::from(p[1]) + 114 * u32::from(p[2]);
            ((acc + 500) / 1000).min(255) as u8
        })
        .collect();
    GrayImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

/// Decodes a mask from a single-channel PNG or PGM; intensity > 127 is marked.
pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask> {
    match decode_image(bytes)? {
        DecodedImage::Gray(g) => Ok(BinaryMask::from_gray(&g)),
        DecodedImage::Rgb(_) => Err(Error::UnsupportedFormat(
            "mask must be single-channel".into(),
        )),
    }
}

fn encode_png(width: u32, height: u32, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>> {
    let io = |e: png::EncodingError| Error::Io(std::io::Error::other(e));
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width, height);
        encoder.set_color(color);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().map_err(io)?;
        writer.write_image_data(data).map_err(io)?;
        writer.finish().map_err(io)?;
    }
    Ok(out)
}

/// Which side of a copy-move pair an overlay region shows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionRole {
    Original,
    Duplicated,
}

/// Overlay colour of the original region. Never gray, so it cannot collide
/// with a background pixel.
pub const ORIGINAL_RGB: [u8; 3] = [0, 255, 0];
/// Overlay colour of the duplicated region.
pub const DUPLICATED_RGB: [u8; 3] = [255, 0, 0];

impl RegionRole {
    pub fn rgb(self) -> [u8; 3] {
        match self {
            RegionRole::Original => ORIGINAL_RGB,
            RegionRole::Duplicated => DUPLICATED_RGB,
        }
    }
}

/// Renders the grayscale image as an RGB PNG with labelled regions painted
/// in [`ORIGINAL_RGB`] / [`DUPLICATED_RGB`]. Later entries overwrite earlier
/// ones where they overlap.
pub fn encode_overlay(img: &GrayImage, regions: &[(RegionRole, &[Point])]) -> Result<Vec<u8>> {
    let (w, h) = img.dimensions();
    let mut data: Vec<u8> = img.data().iter().flat_map(|&g| [g, g, g]).collect();
    for (role, points) in regions {
        let rgb = role.rgb();
        for &(u, v) in points.iter() {
            if u >= w || v >= h {
                return Err(Error::DimensionMismatch {
                    expected: (w, h),
                    actual: (u + 1, v + 1),
                });
            }
            let i = 3 * (v as usize * w as usize + u as usize);
            data[i..i + 3].copy_from_slice(&rgb);
        }
    }
    encode_png(w, h, png::ColorType::Rgb, &data)
}

pub fn read_image(path: &Path) -> Result<DecodedImage> {
    decode_image(&std::fs::read(path)?)
}

/// Reads any supported image and converts it to grayscale.
pub fn read_gray(path: &Path) -> Result<GrayImage> {
    Ok(read_image(path)?.into_gray())
}

pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    decode_mask(&std::fs::read(path)?)
}
