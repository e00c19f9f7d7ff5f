//! C ABI over `copymove-lbp`.
//!
//! Images, masks and verdicts are opaque heap handles created by `cml_*`
//! constructors and released with the matching `*_free`. Every fallible call
//! returns a [`CmlStatus`]; on failure a human-readable message is kept per
//! thread and can be fetched with [`cml_last_error_message`]. Panics never
//! cross the boundary: they are reported as `CML_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use copymove_lbp::detector::{detect, DetectorParams};
use copymove_lbp::discriminator::{discriminate, DiscriminatorConfig, FinalLabel, Verdict, Vote};
use copymove_lbp::raster::{decode_image, decode_mask, BinaryMask, GrayImage};
use copymove_lbp::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmlStatus {
    Ok = 0,
    NullPointer = 1,
    MalformedImage = 2,
    UnsupportedFormat = 3,
    DimensionMismatch = 4,
    ImageTooSmall = 5,
    NotEnoughRegions = 6,
    EmptyBand = 7,
    GeometryViolation = 8,
    InvalidConfig = 9,
    Io = 10,
    OutOfRange = 11,
    Internal = 99,
}

/// Overall verdict of a discrimination.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmlLabel {
    Undecided = 0,
    AForged = 1,
    BForged = 2,
}

/// A single radius' vote.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmlVote {
    Abstain = 0,
    AForged = 1,
    BForged = 2,
}

/// Opaque 8-bit grayscale image.
pub struct CmlImage(GrayImage);
/// Opaque binary mask.
pub struct CmlMask(BinaryMask);
/// Opaque discrimination verdict.
pub struct CmlVerdict(Verdict);

/// Per-radius data copied out of a verdict. Deviations are NaN when the
/// radius abstained before a histogram could be formed.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CmlRadiusDecision {
    pub radius: f64,
    pub std_a: f64,
    pub std_b: f64,
    pub vote: CmlVote,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> CmlStatus {
    match err {
        Error::MalformedImage(_) => CmlStatus::MalformedImage,
        Error::UnsupportedFormat(_) => CmlStatus::UnsupportedFormat,
        Error::DimensionMismatch { .. } => CmlStatus::DimensionMismatch,
        Error::ImageTooSmall { .. } => CmlStatus::ImageTooSmall,
        Error::NotEnoughRegions { .. } => CmlStatus::NotEnoughRegions,
        Error::EmptyBand { .. } => CmlStatus::EmptyBand,
        Error::GeometryViolation(_) | Error::OffsetWouldClip { .. } => CmlStatus::GeometryViolation,
        Error::InvalidConfig(_) => CmlStatus::InvalidConfig,
        Error::Io(_) | Error::LayoutError { .. } => CmlStatus::Io,
        _ => CmlStatus::Internal,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (CmlStatus, String)>) -> CmlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CmlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            CmlStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (CmlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CmlStatus, String) {
    (CmlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], (CmlStatus, String)> {
    if data.is_null() {
        if len == 0 {
            return Ok(&[]);
        }
        return Err(null("data"));
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), (CmlStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cml_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Decodes a PNG or binary PGM/PPM byte buffer; colour input is converted
/// to grayscale.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cml_image_decode(data: *const u8, len: usize, out: *mut *mut CmlImage) -> CmlStatus {
    guard(|| {
        let buf = bytes(data, len)?;
        let img = decode_image(buf).map_err(lib_err)?.into_gray();
        write_out(out, CmlImage(img))
    })
}

/// Wraps a row-major 8-bit buffer of `width * height` bytes (copied).
///
/// # Safety
/// `data` must point to `width * height` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cml_image_from_gray(
    width: u32,
    height: u32,
    data: *const u8,
    out: *mut *mut CmlImage,
) -> CmlStatus {
    guard(|| {
        let n = (width as usize)
            .checked_mul(height as usize)
            .ok_or_else(|| (CmlStatus::OutOfRange, "image size overflows".to_string()))?;
        let buf = bytes(data, n)?;
        let img = GrayImage::new(width, height, buf.to_vec()).map_err(lib_err)?;
        write_out(out, CmlImage(img))
    })
}

/// # Safety
/// `img` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn cml_image_width(img: *const CmlImage) -> u32 {
    img.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `img` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn cml_image_height(img: *const CmlImage) -> u32 {
    img.as_ref().map_or(0, |i| i.0.height())
}

/// # Safety
/// `img` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cml_image_free(img: *mut CmlImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Decodes a grayscale PNG/PGM mask; values above 127 are foreground.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cml_mask_decode(data: *const u8, len: usize, out: *mut *mut CmlMask) -> CmlStatus {
    guard(|| {
        let buf = bytes(data, len)?;
        let mask = decode_mask(buf).map_err(lib_err)?;
        write_out(out, CmlMask(mask))
    })
}

/// Builds a mask from `width * height` bytes; nonzero is foreground.
///
/// # Safety
/// `data` must point to `width * height` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cml_mask_from_bytes(
    width: u32,
    height: u32,
    data: *const u8,
    out: *mut *mut CmlMask,
) -> CmlStatus {
    guard(|| {
        let n = (width as usize)
            .checked_mul(height as usize)
            .ok_or_else(|| (CmlStatus::OutOfRange, "mask size overflows".to_string()))?;
        let buf = bytes(data, n)?;
        let mask = BinaryMask::new(width, height, buf.iter().map(|&b| b != 0).collect()).map_err(lib_err)?;
        write_out(out, CmlMask(mask))
    })
}

/// Number of foreground pixels, or 0 for NULL.
///
/// # Safety
/// `mask` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn cml_mask_count(mask: *const CmlMask) -> usize {
    mask.as_ref().map_or(0, |m| m.0.count())
}

/// Copies the mask into `out` as 0/255 bytes.
///
/// # Safety
/// `out` must have room for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cml_mask_copy_bytes(mask: *const CmlMask, out: *mut u8, len: usize) -> CmlStatus {
    guard(|| {
        let m = mask.as_ref().ok_or_else(|| null("mask"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let bits = m.0.bits();
        if len < bits.len() {
            return Err((CmlStatus::OutOfRange, format!("buffer holds {len} bytes, need {}", bits.len())));
        }
        let dst = slice::from_raw_parts_mut(out, bits.len());
        for (d, &b) in dst.iter_mut().zip(bits) {
            *d = if b { 255 } else { 0 };
        }
        Ok(())
    })
}

/// # Safety
/// `mask` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cml_mask_free(mask: *mut CmlMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Runs the block-matching copy-move detector with default parameters.
///
/// # Safety
/// `img` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cml_detect(img: *const CmlImage, out: *mut *mut CmlMask) -> CmlStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| null("img"))?;
        let result = detect(&img.0, &DetectorParams::default()).map_err(lib_err)?;
        write_out(out, CmlMask(result.mask))
    })
}

/// Decides which of the mask's two largest components is the duplicate.
///
/// `radii`/`n_radii` select the LBP radii (NULL or 0 means 2, 3, 4);
/// `band_width` of 0 selects the default half-width.
///
/// # Safety
/// Handles must be live; `radii` must point to `n_radii` doubles when
/// non-NULL; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cml_discriminate(
    img: *const CmlImage,
    mask: *const CmlMask,
    radii: *const f64,
    n_radii: usize,
    band_width: u32,
    out: *mut *mut CmlVerdict,
) -> CmlStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| null("img"))?;
        let mask = mask.as_ref().ok_or_else(|| null("mask"))?;
        let mut cfg = DiscriminatorConfig::default();
        if !radii.is_null() && n_radii > 0 {
            cfg.radii = slice::from_raw_parts(radii, n_radii).to_vec();
        }
        if band_width > 0 {
            cfg.band_width = band_width;
        }
        let verdict = discriminate(&img.0, &mask.0, &cfg).map_err(lib_err)?;
        write_out(out, CmlVerdict(verdict))
    })
}

/// # Safety
/// `verdict` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cml_verdict_label(verdict: *const CmlVerdict) -> CmlLabel {
    match verdict.as_ref().map(|v| v.0.final_label) {
        Some(FinalLabel::AForged) => CmlLabel::AForged,
        Some(FinalLabel::BForged) => CmlLabel::BForged,
        _ => CmlLabel::Undecided,
    }
}

/// # Safety
/// `verdict` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cml_verdict_radius_count(verdict: *const CmlVerdict) -> usize {
    verdict.as_ref().map_or(0, |v| v.0.decisions.len())
}

/// # Safety
/// `verdict` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cml_verdict_radius(
    verdict: *const CmlVerdict,
    index: usize,
    out: *mut CmlRadiusDecision,
) -> CmlStatus {
    guard(|| {
        let v = verdict.as_ref().ok_or_else(|| null("verdict"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = v.0.decisions.get(index).ok_or_else(|| {
            (CmlStatus::OutOfRange, format!("radius index {index} of {}", v.0.decisions.len()))
        })?;
        *out = CmlRadiusDecision {
            radius: d.radius,
            std_a: d.std_a.unwrap_or(f64::NAN),
            std_b: d.std_b.unwrap_or(f64::NAN),
            vote: match d.vote {
                Vote::AForged => CmlVote::AForged,
                Vote::BForged => CmlVote::BForged,
                Vote::Abstain => CmlVote::Abstain,
            },
        };
        Ok(())
    })
}

/// The verdict as a JSON document; release with [`cml_string_free`].
///
/// # Safety
/// `verdict` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cml_verdict_json(verdict: *const CmlVerdict, out: *mut *mut c_char) -> CmlStatus {
    guard(|| {
        let v = verdict.as_ref().ok_or_else(|| null("verdict"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = v.0.to_json().map_err(lib_err)?;
        let s = CString::new(json).map_err(|e| (CmlStatus::Internal, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `verdict` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cml_verdict_free(verdict: *mut CmlVerdict) {
    if !verdict.is_null() {
        drop(Box::from_raw(verdict));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cml_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Convenience for Rust callers and tests: the last error as an owned string.
pub fn last_error() -> Option<String> {
    let p = cml_last_error_message();
    if p.is_null() {
        None
    } else {
        // SAFETY: non-null pointers come from the thread-local CString.
        Some(unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
    }
}
