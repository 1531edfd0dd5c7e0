//! Synthetic class-coded frequency textures for the desk-scale harness.
//!
//! Images are built so the harness exercises the frequency mechanics the
//! defense relies on. The coarse steps in play are the uniform filtering
//! step for the harness epsilon and the two-band coarse step 40, so every
//! clean coefficient is placed either inside the zero bin or pinned near a
//! multiple of those steps:
//!
//! - Fifteen low-frequency "background" bands carry loud class-independent
//!   levels from {-40, 0, +40}. Their cross-block deviation dominates, so
//!   per-image ranking fills the accuracy-sensitive set with them; being
//!   step multiples, they survive coarse quantization unchanged and absorb
//!   any bounded coefficient shift.
//! - One "signature" block per image carries two class-sign-coded
//!   coefficients of magnitude 200, again near step multiples. The
//!   signature spans few pixels, which keeps both its contribution to the
//!   classifier margin and its exposure to max-norm attacks small, and it
//!   passes through coarse quantization exactly.
//! - Twenty-eight "fragile" bands tile every block with a small, clean,
//!   sign-coded class amplitude. Training concentrates weight here, so
//!   gradient-sign attacks spend their budget on these bands; the small
//!   clean coefficients and the perturbation round to zero together under
//!   a coarse step, which is the filtering effect being measured.

use crate::dct::{inverse_dct, CoeffBlock, ZIGZAG};
use crate::image_io::PixelImage;
use crate::rng::SplitMix64;

pub const IMAGE_DIM: usize = 192;

/// Natural indices of the loud class-independent bands (zig-zag 1..=15).
pub fn background_bands() -> [usize; 15] {
    std::array::from_fn(|i| ZIGZAG[1 + i])
}

/// Natural indices of the signature-block class bands (zig-zag 16..=17).
pub fn robust_bands() -> [usize; 2] {
    std::array::from_fn(|i| ZIGZAG[16 + i])
}

/// Natural indices of the small fragile class bands (zig-zag 24..=51).
pub fn fragile_bands() -> [usize; 28] {
    std::array::from_fn(|i| ZIGZAG[24 + i])
}

/// Per-class signs over the signature bands; distinct for classes 0..=3.
pub fn robust_mask(class: usize) -> [f64; 2] {
    let bit = |b: usize| if (class >> b) & 1 == 0 { 1.0 } else { -1.0 };
    [bit(0), bit(1)]
}

/// Per-class signs over the fragile bands.
pub fn fragile_mask(class: usize) -> [f64; 28] {
    let mut rng =
        SplitMix64::new((0xf4a6 + class as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x5ca1_ab1e);
    std::array::from_fn(|_| if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 })
}

const BACKGROUND_STEP: f64 = 40.0;
const SIGNATURE_AMPLITUDE: f64 = 200.0;
const FRAGILE_AMPLITUDE: f64 = 1.5;
const PIXEL_NOISE: f64 = 2.0;

/// Training hyperparameters used by the harness and its frozen numbers.
pub const TRAIN_EPOCHS: usize = 400;
pub const TRAIN_LEARNING_RATE: f64 = 10.0;
pub const TRAIN_WEIGHT_DECAY: f64 = 1e-2;

/// Trains the harness classifier with the canonical hyperparameters.
pub fn train_harness_classifier(
    corpus: &[(PixelImage, usize)],
    classes: usize,
) -> Result<crate::defense::ToyClassifier, crate::defense::DefenseError> {
    crate::defense::ToyClassifier::train(
        corpus,
        classes,
        TRAIN_EPOCHS,
        TRAIN_LEARNING_RATE,
        TRAIN_WEIGHT_DECAY,
    )
}

/// Deterministic corpus of `count` grayscale 192x192 images cycling
/// through `classes` labels.
pub fn synthetic_corpus(count: usize, classes: usize, seed: u64) -> Vec<(PixelImage, usize)> {
    assert!((2..=4).contains(&classes), "classes must be in 2..=4");
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|idx| {
            let label = idx % classes;
            (synthesize_image(label, &mut rng), label)
        })
        .collect()
}

fn synthesize_image(class: usize, rng: &mut SplitMix64) -> PixelImage {
    let robust = robust_mask(class);
    let fragile = fragile_mask(class);
    let side = IMAGE_DIM / 8;
    let mut plane = vec![0u8; IMAGE_DIM * IMAGE_DIM];
    for by in 0..side {
        for bx in 0..side {
            let mut coeffs = CoeffBlock::zero();
            if by == 0 && bx == 0 {
                for (k, &band) in robust_bands().iter().enumerate() {
                    coeffs.coeffs[band] = robust[k] * SIGNATURE_AMPLITUDE;
                }
            } else {
                for &band in background_bands().iter() {
                    let level = rng.next_below(3) as f64 - 1.0;
                    coeffs.coeffs[band] = BACKGROUND_STEP * level;
                }
            }
            for (k, &band) in fragile_bands().iter().enumerate() {
                coeffs.coeffs[band] += fragile[k] * FRAGILE_AMPLITUDE * rng.next_range(0.8, 1.2);
            }
            let spatial = inverse_dct(&coeffs);
            for r in 0..8 {
                for c in 0..8 {
                    let noise = rng.next_range(-PIXEL_NOISE, PIXEL_NOISE);
                    let v = (128.0 + spatial.at(r, c) + noise).round().clamp(0.0, 255.0);
                    plane[(by * 8 + r) * IMAGE_DIM + bx * 8 + c] = v as u8;
                }
            }
        }
    }
    PixelImage::gray(IMAGE_DIM, IMAGE_DIM, plane).expect("fixed shape")
}
