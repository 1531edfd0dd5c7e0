//! Raw image ingestion: binary PNM (P5 grayscale, P6 RGB) and the JFIF
//! full-range color transform.
//!
//! Only maxval-255 binary variants are accepted; header comments are
//! skipped. The color transform rounds half away from zero so that a
//! round trip through YCbCr moves any sample by at most 1.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("channel count must be 1 or 3, got {0}")]
    BadChannelCount(usize),
    #[error("plane {plane} has {got} samples, expected {expected}")]
    BadPlaneSize {
        plane: usize,
        got: usize,
        expected: usize,
    },
    #[error("width and height must be positive")]
    EmptyDimensions,
    #[error("operation requires a 3-channel image, got {0} channel(s)")]
    WrongChannelCount(usize),
}

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: String },
    #[error("unsupported maxval {maxval} at byte {offset}, only 255 is supported")]
    UnsupportedMaxval { maxval: u64, offset: usize },
    #[error("truncated payload at byte {offset}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Planar 8-bit image, grayscale (1 plane) or RGB (3 planes).
///
/// Every plane is a row-major `width * height` sample array. Constructors
/// enforce the shape so downstream code can index without checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelImage {
    width: usize,
    height: usize,
    planes: Vec<Vec<u8>>,
}

impl PixelImage {
    pub fn new(width: usize, height: usize, planes: Vec<Vec<u8>>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions);
        }
        if planes.len() != 1 && planes.len() != 3 {
            return Err(ImageError::BadChannelCount(planes.len()));
        }
        let expected = width * height;
        for (i, p) in planes.iter().enumerate() {
            if p.len() != expected {
                return Err(ImageError::BadPlaneSize {
                    plane: i,
                    got: p.len(),
                    expected,
                });
            }
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    pub fn gray(width: usize, height: usize, samples: Vec<u8>) -> Result<Self, ImageError> {
        Self::new(width, height, vec![samples])
    }

    pub fn rgb(
        width: usize,
        height: usize,
        r: Vec<u8>,
        g: Vec<u8>,
        b: Vec<u8>,
    ) -> Result<Self, ImageError> {
        Self::new(width, height, vec![r, g, b])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn plane(&self, i: usize) -> &[u8] {
        &self.planes[i]
    }

    pub fn planes(&self) -> &[Vec<u8>] {
        &self.planes
    }

    /// Samples of one pixel, channel by channel.
    pub fn pixel(&self, x: usize, y: usize) -> Vec<u8> {
        self.planes.iter().map(|p| p[y * self.width + x]).collect()
    }
}

/// Decodes a binary PGM (P5) or PPM (P6) with maxval 255.
pub fn read_pnm(bytes: &[u8]) -> Result<PixelImage, PnmError> {
    let mut cur = Cursor { bytes, pos: 0 };

    let magic = cur.token("magic number")?;
    let channels = match magic.as_slice() {
        b"P5" => 1,
        b"P6" => 3,
        _ => {
            return Err(PnmError::MalformedHeader {
                offset: 0,
                reason: format!(
                    "expected magic P5 or P6, got {:?}",
                    String::from_utf8_lossy(&magic)
                ),
            })
        }
    };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    if width == 0 || height == 0 {
        return Err(PnmError::MalformedHeader {
            offset: cur.pos,
            reason: format!("dimensions must be positive, got {width}x{height}"),
        });
    }
    // Keeps width*height*channels well inside usize on every platform.
    if width > 1 << 24 || height > 1 << 24 {
        return Err(PnmError::MalformedHeader {
            offset: cur.pos,
            reason: format!("dimensions {width}x{height} out of supported range"),
        });
    }
    let maxval_offset = cur.pos;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval {
            maxval,
            offset: maxval_offset,
        });
    }
    // Exactly one whitespace byte separates the header from the payload.
    match cur.bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(b) => {
            return Err(PnmError::MalformedHeader {
                offset: cur.pos,
                reason: format!("expected whitespace before payload, got 0x{b:02x}"),
            })
        }
        None => {
            return Err(PnmError::MalformedHeader {
                offset: cur.pos,
                reason: "file ends before payload".into(),
            })
        }
    }

    let w = width as usize;
    let h = height as usize;
    let expected = w * h * channels;
    let payload = &cur.bytes[cur.pos..];
    if payload.len() < expected {
        return Err(PnmError::TruncatedPayload {
            offset: cur.pos,
            expected,
            found: payload.len(),
        });
    }
    let payload = &payload[..expected];

    let img = if channels == 1 {
        PixelImage::gray(w, h, payload.to_vec())?
    } else {
        let n = w * h;
        let mut r = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for px in payload.chunks_exact(3) {
            r.push(px[0]);
            g.push(px[1]);
            b.push(px[2]);
        }
        PixelImage::rgb(w, h, r, g, b)?
    };
    Ok(img)
}

/// Encodes as binary P5/P6. `read_pnm(write_pnm(img))` is bit-exact.
pub fn write_pnm(img: &PixelImage) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    if img.channels() == 1 {
        out.extend_from_slice(img.plane(0));
    } else {
        let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
        for i in 0..img.width() * img.height() {
            out.push(r[i]);
            out.push(g[i]);
            out.push(b[i]);
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skips whitespace and `#`-to-end-of-line comments.
    fn skip_filler(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self, what: &str) -> Result<Vec<u8>, PnmError> {
        self.skip_filler();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(PnmError::MalformedHeader {
                offset: start,
                reason: format!("missing {what}"),
            });
        }
        Ok(self.bytes[start..self.pos].to_vec())
    }

    fn number(&mut self, what: &str) -> Result<u64, PnmError> {
        self.skip_filler();
        let start = self.pos;
        let tok = self.token(what)?;
        std::str::from_utf8(&tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PnmError::MalformedHeader {
                offset: start,
                reason: format!("{what} is not a decimal integer"),
            })
    }
}

fn round_away(v: f64) -> f64 {
    // f64::round is round-half-away-from-zero.
    v.round()
}

fn clamp_u8(v: f64) -> u8 {
    round_away(v).clamp(0.0, 255.0) as u8
}

/// JFIF full-range RGB -> YCbCr. Gray input (R=G=B=v) maps to (v, 128, 128).
pub fn rgb_to_ycbcr(img: &PixelImage) -> Result<PixelImage, ImageError> {
    if img.channels() != 3 {
        return Err(ImageError::WrongChannelCount(img.channels()));
    }
    let n = img.width() * img.height();
    let (rp, gp, bp) = (img.plane(0), img.plane(1), img.plane(2));
    let mut y = Vec::with_capacity(n);
    let mut cb = Vec::with_capacity(n);
    let mut cr = Vec::with_capacity(n);
    for i in 0..n {
        let (r, g, b) = (rp[i] as f64, gp[i] as f64, bp[i] as f64);
        y.push(clamp_u8(0.299 * r + 0.587 * g + 0.114 * b));
        cb.push(clamp_u8(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b));
        cr.push(clamp_u8(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b));
    }
    PixelImage::new(img.width(), img.height(), vec![y, cb, cr])
}

/// Inverse of [`rgb_to_ycbcr`]; the round trip moves a sample by at most 1.
pub fn ycbcr_to_rgb(img: &PixelImage) -> Result<PixelImage, ImageError> {
    if img.channels() != 3 {
        return Err(ImageError::WrongChannelCount(img.channels()));
    }
    let n = img.width() * img.height();
    let (yp, cbp, crp) = (img.plane(0), img.plane(1), img.plane(2));
    let mut r = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let y = yp[i] as f64;
        let cb = cbp[i] as f64 - 128.0;
        let cr = crp[i] as f64 - 128.0;
        r.push(clamp_u8(y + 1.402 * cr));
        g.push(clamp_u8(y - 0.344136 * cb - 0.714136 * cr));
        b.push(clamp_u8(y + 1.772 * cb));
    }
    PixelImage::new(img.width(), img.height(), vec![r, g, b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_pixel_pgm() {
        let img = read_pnm(b"P5 1 1 255 \x80").unwrap();
        assert_eq!(img.width(), 1);
        assert_eq!(img.height(), 1);
        assert_eq!(img.channels(), 1);
        assert_eq!(img.plane(0), &[128]);
    }

    #[test]
    fn two_pixel_ppm_payload_order() {
        let img = read_pnm(b"P6 2 1 255 \x01\x02\x03\x04\x05\x06").unwrap();
        assert_eq!(img.channels(), 3);
        assert_eq!(img.pixel(0, 0), vec![1, 2, 3]);
        assert_eq!(img.pixel(1, 0), vec![4, 5, 6]);
    }

    #[test]
    fn truncated_payload_reports_offset() {
        // Header declares 4 pixels, payload carries 3 bytes.
        let err = read_pnm(b"P5 2 2 255 \x01\x02\x03").unwrap_err();
        match err {
            PnmError::TruncatedPayload {
                offset,
                expected,
                found,
            } => {
                assert_eq!(offset, 11);
                assert_eq!(expected, 4);
                assert_eq!(found, 3);
            }
            other => panic!("expected TruncatedPayload, got {other:?}"),
        }
    }

    #[test]
    fn maxval_other_than_255_rejected() {
        let err = read_pnm(b"P5 1 1 65535 \x00\x00").unwrap_err();
        assert!(matches!(
            err,
            PnmError::UnsupportedMaxval { maxval: 65535, .. }
        ));
    }

    #[test]
    fn header_comments_skipped() {
        let img = read_pnm(b"P5 # width next\n2 1 # then maxval\n255\n\x0a\x0b").unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.plane(0), &[0x0a, 0x0b]);
    }

    #[test]
    fn bad_magic_is_header_error_at_offset_zero() {
        let err = read_pnm(b"P3 1 1 255 0").unwrap_err();
        assert!(matches!(err, PnmError::MalformedHeader { offset: 0, .. }));
    }

    #[test]
    fn write_single_gray() {
        let img = PixelImage::gray(1, 1, vec![128]).unwrap();
        assert_eq!(write_pnm(&img), b"P5\n1 1\n255\n\x80");
    }

    #[test]
    fn write_rgb_payload_size() {
        let img = PixelImage::rgb(2, 2, vec![0; 4], vec![0; 4], vec![0; 4]).unwrap();
        let bytes = write_pnm(&img);
        let header_len = b"P6\n2 2\n255\n".len();
        assert_eq!(bytes.len() - header_len, 12);
    }

    #[test]
    fn gray_rgb_maps_to_neutral_chroma() {
        for v in [0u8, 1, 77, 128, 200, 255] {
            let img = PixelImage::rgb(1, 1, vec![v], vec![v], vec![v]).unwrap();
            let ycc = rgb_to_ycbcr(&img).unwrap();
            assert_eq!(ycc.pixel(0, 0), vec![v, 128, 128], "gray level {v}");
        }
    }

    #[test]
    fn color_transform_rejects_grayscale() {
        let img = PixelImage::gray(1, 1, vec![0]).unwrap();
        assert!(matches!(
            rgb_to_ycbcr(&img),
            Err(ImageError::WrongChannelCount(1))
        ));
    }

    #[test]
    fn color_roundtrip_bound_on_sample() {
        // The full 2^24 sweep lives in color_roundtrip_bound_exhaustive;
        // this seeded slice runs in the default suite.
        let mut rng = crate::rng::SplitMix64::new(0x00c0_ffee);
        for _ in 0..200_000 {
            let v = rng.next_u64();
            let (r, g, b) = (v as u8, (v >> 8) as u8, (v >> 16) as u8);
            check_roundtrip_close(r, g, b);
        }
    }

    #[test]
    #[ignore = "exhaustive 2^24 sweep; run on demand"]
    fn color_roundtrip_bound_exhaustive() {
        for r in 0..=255u8 {
            for g in 0..=255u8 {
                for b in 0..=255u8 {
                    check_roundtrip_close(r, g, b);
                }
            }
        }
    }

    fn check_roundtrip_close(r: u8, g: u8, b: u8) {
        let img = PixelImage::rgb(1, 1, vec![r], vec![g], vec![b]).unwrap();
        let back = ycbcr_to_rgb(&rgb_to_ycbcr(&img).unwrap()).unwrap();
        let px = back.pixel(0, 0);
        for (orig, got) in [r, g, b].iter().zip(&px) {
            let diff = (*orig as i16 - *got as i16).abs();
            assert!(diff <= 1, "({r},{g},{b}) -> {px:?}, channel off by {diff}");
        }
    }

    proptest! {
        #[test]
        fn pnm_roundtrip_gray(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let samples: Vec<u8> = (0..w * h).map(|_| rng.next_u64() as u8).collect();
            let img = PixelImage::gray(w, h, samples).unwrap();
            prop_assert_eq!(read_pnm(&write_pnm(&img)).unwrap(), img);
        }

        #[test]
        fn pnm_roundtrip_rgb(w in 1usize..16, h in 1usize..16, seed in any::<u64>()) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let mut plane = || (0..w * h).map(|_| rng.next_u64() as u8).collect::<Vec<_>>();
            let img = PixelImage::rgb(w, h, plane(), plane(), plane()).unwrap();
            prop_assert_eq!(read_pnm(&write_pnm(&img)).unwrap(), img);
        }
    }
}
