//! C ABI for the purification codec.
//!
//! Conventions:
//! - Images are opaque [`PjImage`] handles created by the constructors and
//!   released with [`pj_image_free`].
//! - Every fallible function returns a [`PjStatus`]; on failure a
//!   thread-local message is available from [`pj_last_error_message`]
//!   until the next call on the same thread.
//! - Byte buffers returned through out-parameters are released with
//!   [`pj_bytes_free`].
//! - Quantization tables cross the boundary as 64 bytes in zig-zag order,
//!   matching the DQT payload and the CLI table JSON.

use purejpeg::defense::{distortion, purify, PurifyConfig};
use purejpeg::freq::{analyze_image, DmParams};
use purejpeg::image_io::{read_pnm, write_pnm, PixelImage};
use purejpeg::jpeg;
use purejpeg::quant::{min_filtering_step, QuantTable};
use std::cell::RefCell;
use std::ffi::{c_char, CString};

/// Opaque image handle.
pub struct PjImage {
    inner: PixelImage,
}

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PjStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument was out of range or inconsistent.
    InvalidArgument = 2,
    /// Input bytes could not be parsed.
    FormatError = 3,
    /// The input uses a feature outside the supported baseline subset.
    Unsupported = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: PjStatus, message: &str) -> PjStatus {
    set_error(message);
    status
}

fn jpeg_status(err: &jpeg::JpegError) -> PjStatus {
    match err {
        jpeg::JpegError::UnsupportedProgressive { .. }
        | jpeg::JpegError::UnsupportedArithmetic { .. }
        | jpeg::JpegError::UnsupportedSubsampling { .. }
        | jpeg::JpegError::Unsupported { .. } => PjStatus::Unsupported,
        jpeg::JpegError::BadDimensions => PjStatus::InvalidArgument,
        _ => PjStatus::FormatError,
    }
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn pj_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds an image from interleaved 8-bit samples (row-major; RGB order
/// for 3 channels). `channels` must be 1 or 3.
///
/// # Safety
/// `pixels` must point to `width * height * channels` readable bytes and
/// `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn pj_image_from_pixels(
    width: u32,
    height: u32,
    channels: u32,
    pixels: *const u8,
    out: *mut *mut PjImage,
) -> PjStatus {
    if pixels.is_null() || out.is_null() {
        return fail(PjStatus::NullArgument, "pixels and out must be non-null");
    }
    if channels != 1 && channels != 3 {
        return fail(PjStatus::InvalidArgument, "channels must be 1 or 3");
    }
    let (w, h, c) = (width as usize, height as usize, channels as usize);
    let data = std::slice::from_raw_parts(pixels, w * h * c);
    let mut planes: Vec<Vec<u8>> = (0..c).map(|_| Vec::with_capacity(w * h)).collect();
    for px in data.chunks_exact(c) {
        for (plane, &v) in planes.iter_mut().zip(px) {
            plane.push(v);
        }
    }
    match PixelImage::new(w, h, planes) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(PjImage { inner }));
            PjStatus::Ok
        }
        Err(e) => fail(PjStatus::InvalidArgument, &e.to_string()),
    }
}

/// Parses a binary PGM/PPM file.
///
/// # Safety
/// `bytes` must point to `len` readable bytes and `out` to a writable
/// handle slot.
#[no_mangle]
pub unsafe extern "C" fn pj_image_read_pnm(
    bytes: *const u8,
    len: usize,
    out: *mut *mut PjImage,
) -> PjStatus {
    if bytes.is_null() || out.is_null() {
        return fail(PjStatus::NullArgument, "bytes and out must be non-null");
    }
    let data = std::slice::from_raw_parts(bytes, len);
    match read_pnm(data) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(PjImage { inner }));
            PjStatus::Ok
        }
        Err(e) => fail(PjStatus::FormatError, &e.to_string()),
    }
}

/// Serializes an image as binary PGM/PPM into a new buffer; release it
/// with [`pj_bytes_free`].
///
/// # Safety
/// All pointers must be non-null; `img` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pj_image_write_pnm(
    img: *const PjImage,
    out_bytes: *mut *mut u8,
    out_len: *mut usize,
) -> PjStatus {
    if img.is_null() || out_bytes.is_null() || out_len.is_null() {
        return fail(PjStatus::NullArgument, "arguments must be non-null");
    }
    let bytes = write_pnm(&(*img).inner).into_boxed_slice();
    *out_len = bytes.len();
    *out_bytes = Box::into_raw(bytes) as *mut u8;
    PjStatus::Ok
}

/// # Safety
/// `img` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pj_image_width(img: *const PjImage) -> u32 {
    if img.is_null() {
        return 0;
    }
    (*img).inner.width() as u32
}

/// # Safety
/// `img` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pj_image_height(img: *const PjImage) -> u32 {
    if img.is_null() {
        return 0;
    }
    (*img).inner.height() as u32
}

/// # Safety
/// `img` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pj_image_channels(img: *const PjImage) -> u32 {
    if img.is_null() {
        return 0;
    }
    (*img).inner.channels() as u32
}

/// Copies interleaved samples into a caller buffer of at least
/// `width * height * channels` bytes.
///
/// # Safety
/// `img` must be a live handle; `out` must point to `capacity` writable
/// bytes.
#[no_mangle]
pub unsafe extern "C" fn pj_image_pixels(
    img: *const PjImage,
    out: *mut u8,
    capacity: usize,
) -> PjStatus {
    if img.is_null() || out.is_null() {
        return fail(PjStatus::NullArgument, "arguments must be non-null");
    }
    let image = &(*img).inner;
    let needed = image.width() * image.height() * image.channels();
    if capacity < needed {
        return fail(
            PjStatus::InvalidArgument,
            &format!("buffer holds {capacity} bytes, image needs {needed}"),
        );
    }
    let out = std::slice::from_raw_parts_mut(out, needed);
    let n = image.width() * image.height();
    for i in 0..n {
        for p in 0..image.channels() {
            out[i * image.channels() + p] = image.plane(p)[i];
        }
    }
    PjStatus::Ok
}

/// Releases an image handle. Null is ignored.
///
/// # Safety
/// `img` must be a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pj_image_free(img: *mut PjImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Releases a buffer returned by this library.
///
/// # Safety
/// `bytes`/`len` must describe an allocation returned by this library
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pj_bytes_free(bytes: *mut u8, len: usize) {
    if !bytes.is_null() {
        drop(Box::from_raw(std::ptr::slice_from_raw_parts_mut(
            bytes, len,
        )));
    }
}

/// Smallest integer quantization step that rounds every DCT coefficient of
/// an epsilon-bounded spatial perturbation to zero.
///
/// # Safety
/// `out_step` must be non-null.
#[no_mangle]
pub unsafe extern "C" fn pj_min_filtering_step(epsilon: f64, out_step: *mut u32) -> PjStatus {
    if out_step.is_null() {
        return fail(PjStatus::NullArgument, "out_step must be non-null");
    }
    match min_filtering_step(epsilon) {
        Ok(step) => {
            *out_step = step;
            PjStatus::Ok
        }
        Err(e) => fail(PjStatus::InvalidArgument, &e.to_string()),
    }
}

/// Per-band deviation statistics of the luma plane, zig-zag order.
/// `out_mean` and `out_block_count` may be null when not needed.
///
/// # Safety
/// `img` must be a live handle; non-null out-pointers must reference
/// arrays of 64 doubles (or a u64 slot for the count).
#[no_mangle]
pub unsafe extern "C" fn pj_analyze(
    img: *const PjImage,
    out_sigma: *mut f64,
    out_mean: *mut f64,
    out_block_count: *mut u64,
) -> PjStatus {
    if img.is_null() || out_sigma.is_null() {
        return fail(PjStatus::NullArgument, "img and out_sigma must be non-null");
    }
    let stats = analyze_image(&(*img).inner);
    for (pos, &nat) in purejpeg::dct::ZIGZAG.iter().enumerate() {
        *out_sigma.add(pos) = stats.sigma[nat];
        if !out_mean.is_null() {
            *out_mean.add(pos) = stats.mean[nat];
        }
    }
    if !out_block_count.is_null() {
        *out_block_count = stats.block_count as u64;
    }
    PjStatus::Ok
}

/// Synthesizes the two-band table for an image into 64 zig-zag bytes.
///
/// # Safety
/// `img` must be a live handle; `out_table` must reference 64 writable
/// bytes.
#[no_mangle]
pub unsafe extern "C" fn pj_dm_table(
    img: *const PjImage,
    n: u32,
    s1: u8,
    s2: u8,
    out_table: *mut u8,
) -> PjStatus {
    if img.is_null() || out_table.is_null() {
        return fail(PjStatus::NullArgument, "img and out_table must be non-null");
    }
    let params = DmParams {
        n: n as usize,
        s1,
        s2,
    };
    match purejpeg::freq::dm_table(&analyze_image(&(*img).inner), &params) {
        Ok(table) => {
            let zz = table.to_zigzag();
            std::ptr::copy_nonoverlapping(zz.as_ptr(), out_table, 64);
            PjStatus::Ok
        }
        Err(e) => fail(PjStatus::InvalidArgument, &e.to_string()),
    }
}

unsafe fn purify_common(
    img: *const PjImage,
    cfg: PurifyConfig,
    out: *mut *mut PjImage,
    out_table: *mut u8,
) -> PjStatus {
    if img.is_null() || out.is_null() {
        return fail(PjStatus::NullArgument, "img and out must be non-null");
    }
    match purify(&(*img).inner, &cfg) {
        Ok((purified, table)) => {
            if !out_table.is_null() {
                let zz = table.to_zigzag();
                std::ptr::copy_nonoverlapping(zz.as_ptr(), out_table, 64);
            }
            *out = Box::into_raw(Box::new(PjImage { inner: purified }));
            PjStatus::Ok
        }
        Err(e) => fail(PjStatus::InvalidArgument, &e.to_string()),
    }
}

/// Purifies with a per-image two-band table; `out_table` (64 bytes,
/// zig-zag) may be null.
///
/// # Safety
/// As [`pj_image_from_pixels`], plus `out_table` must be null or reference
/// 64 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pj_purify_dm(
    img: *const PjImage,
    n: u32,
    s1: u8,
    s2: u8,
    out: *mut *mut PjImage,
    out_table: *mut u8,
) -> PjStatus {
    purify_common(
        img,
        PurifyConfig::dm(DmParams {
            n: n as usize,
            s1,
            s2,
        }),
        out,
        out_table,
    )
}

/// Purifies with one step for all bands.
///
/// # Safety
/// As [`pj_purify_dm`].
#[no_mangle]
pub unsafe extern "C" fn pj_purify_uniform(
    img: *const PjImage,
    step: u32,
    out: *mut *mut PjImage,
) -> PjStatus {
    purify_common(img, PurifyConfig::uniform(step), out, std::ptr::null_mut())
}

/// Purifies with the standard luminance table scaled by `qf` in 1..=100.
///
/// # Safety
/// As [`pj_purify_dm`].
#[no_mangle]
pub unsafe extern "C" fn pj_purify_default_jpeg(
    img: *const PjImage,
    qf: u32,
    out: *mut *mut PjImage,
) -> PjStatus {
    purify_common(
        img,
        PurifyConfig::default_jpeg(qf),
        out,
        std::ptr::null_mut(),
    )
}

/// Distortion between two same-shape images on the [0,1] sample scale.
///
/// # Safety
/// Handles must be live; out-pointers must be non-null.
#[no_mangle]
pub unsafe extern "C" fn pj_distortion(
    a: *const PjImage,
    b: *const PjImage,
    out_l_inf: *mut f64,
    out_l2: *mut f64,
    out_l0: *mut f64,
) -> PjStatus {
    if a.is_null() || b.is_null() || out_l_inf.is_null() || out_l2.is_null() || out_l0.is_null() {
        return fail(PjStatus::NullArgument, "arguments must be non-null");
    }
    match distortion(&(*a).inner, &(*b).inner) {
        Ok(m) => {
            *out_l_inf = m.l_inf;
            *out_l2 = m.l2;
            *out_l0 = m.l0;
            PjStatus::Ok
        }
        Err(e) => fail(PjStatus::InvalidArgument, &e.to_string()),
    }
}

/// Encodes a baseline JFIF stream carrying the given table (64 zig-zag
/// bytes); release the buffer with [`pj_bytes_free`].
///
/// # Safety
/// `img` must be a live handle; `table_zigzag` must reference 64 readable
/// bytes; out-pointers must be non-null.
#[no_mangle]
pub unsafe extern "C" fn pj_jpeg_encode(
    img: *const PjImage,
    table_zigzag: *const u8,
    out_bytes: *mut *mut u8,
    out_len: *mut usize,
) -> PjStatus {
    if img.is_null() || table_zigzag.is_null() || out_bytes.is_null() || out_len.is_null() {
        return fail(PjStatus::NullArgument, "arguments must be non-null");
    }
    let mut zz = [0u8; 64];
    std::ptr::copy_nonoverlapping(table_zigzag, zz.as_mut_ptr(), 64);
    let table = match QuantTable::from_zigzag(&zz) {
        Ok(t) => t,
        Err(e) => return fail(PjStatus::InvalidArgument, &e.to_string()),
    };
    match jpeg::encode(&(*img).inner, &table) {
        Ok(bytes) => {
            let boxed = bytes.into_boxed_slice();
            *out_len = boxed.len();
            *out_bytes = Box::into_raw(boxed) as *mut u8;
            PjStatus::Ok
        }
        Err(e) => {
            let status = jpeg_status(&e);
            fail(status, &e.to_string())
        }
    }
}

/// Decodes a baseline JFIF stream; `out_table` (64 bytes, zig-zag,
/// the luma quantization table) may be null.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be non-null;
/// `out_table` must be null or reference 64 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pj_jpeg_decode(
    bytes: *const u8,
    len: usize,
    out: *mut *mut PjImage,
    out_table: *mut u8,
) -> PjStatus {
    if bytes.is_null() || out.is_null() {
        return fail(PjStatus::NullArgument, "bytes and out must be non-null");
    }
    let data = std::slice::from_raw_parts(bytes, len);
    match jpeg::decode(data) {
        Ok((img, table)) => {
            if !out_table.is_null() {
                let zz = table.to_zigzag();
                std::ptr::copy_nonoverlapping(zz.as_ptr(), out_table, 64);
            }
            *out = Box::into_raw(Box::new(PjImage { inner: img }));
            PjStatus::Ok
        }
        Err(e) => {
            let status = jpeg_status(&e);
            fail(status, &e.to_string())
        }
    }
}
