//! Shared compress/decompress plumbing: the spatial -> DCT -> quantize ->
//! dequantize -> spatial round trip, without the entropy-coding layer.

use crate::dct::{forward_dct, inverse_dct, partition, reassemble};
use crate::image_io::{rgb_to_ycbcr, ycbcr_to_rgb, PixelImage};
use crate::quant::{dequantize, quantize, QuantTable};

/// Runs one plane through the lossy stage of the codec.
pub(crate) fn requantize_plane(
    plane: &[u8],
    width: usize,
    height: usize,
    table: &QuantTable,
) -> Vec<u8> {
    let grid = partition(plane, width, height);
    let spatial = grid.map(|b| inverse_dct(&dequantize(&quantize(&forward_dct(b), table), table)));
    reassemble(&spatial)
}

/// Full-image requantization: 3-channel images pass through the YCbCr
/// transform, every channel uses the same table, and the result is clamped
/// back to 8-bit pixels.
pub(crate) fn requantize_image(img: &PixelImage, table: &QuantTable) -> PixelImage {
    let (w, h) = (img.width(), img.height());
    if img.channels() == 3 {
        let ycc = rgb_to_ycbcr(img).expect("3-channel image");
        let planes: Vec<Vec<u8>> = ycc
            .planes()
            .iter()
            .map(|p| requantize_plane(p, w, h, table))
            .collect();
        let ycc = PixelImage::new(w, h, planes).expect("same shape as input");
        ycbcr_to_rgb(&ycc).expect("3-channel image")
    } else {
        let plane = requantize_plane(img.plane(0), w, h, table);
        PixelImage::gray(w, h, plane).expect("same shape as input")
    }
}
