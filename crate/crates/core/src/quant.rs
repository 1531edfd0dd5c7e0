//! Quantization tables and the coefficient filtering bound.
//!
//! Rounding is half-away-from-zero everywhere, which makes the strict
//! step bound from [`min_filtering_step`] sufficient: a spatial
//! perturbation bounded by eps has every DCT coefficient bounded by
//! 8*eps, and any step Q > 16*eps rounds all of them to level zero.

use crate::dct::{CoeffBlock, BLOCK_LEN, ZIGZAG};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantError {
    #[error("quantization factor must be in 1..=100, got {0}")]
    QfOutOfRange(u32),
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("quantization step must be in 1..=255, got {0}")]
    StepOutOfRange(u32),
}

/// Standard JPEG luminance quantization table (natural order).
const DEFAULT_LUMA: [u8; BLOCK_LEN] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// 8x8 table of integer quantization steps, each in [1, 255].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantTable {
    steps: [u8; BLOCK_LEN],
}

impl QuantTable {
    /// Builds from natural-order steps; every entry must be nonzero.
    pub fn from_steps(steps: [u8; BLOCK_LEN]) -> Result<Self, QuantError> {
        if let Some(&z) = steps.iter().find(|&&s| s == 0) {
            return Err(QuantError::StepOutOfRange(z as u32));
        }
        Ok(Self { steps })
    }

    pub fn uniform(step: u32) -> Result<Self, QuantError> {
        if step == 0 || step > 255 {
            return Err(QuantError::StepOutOfRange(step));
        }
        Ok(Self {
            steps: [step as u8; BLOCK_LEN],
        })
    }

    pub fn step(&self, i: usize, j: usize) -> u8 {
        self.steps[i * 8 + j]
    }

    /// Natural (row-major) order.
    pub fn steps(&self) -> &[u8; BLOCK_LEN] {
        &self.steps
    }

    /// Zig-zag order, as serialized into DQT segments and table JSON.
    pub fn to_zigzag(&self) -> [u8; BLOCK_LEN] {
        let mut out = [0u8; BLOCK_LEN];
        for (pos, &nat) in ZIGZAG.iter().enumerate() {
            out[pos] = self.steps[nat];
        }
        out
    }

    pub fn from_zigzag(zz: &[u8; BLOCK_LEN]) -> Result<Self, QuantError> {
        let mut steps = [0u8; BLOCK_LEN];
        for (pos, &nat) in ZIGZAG.iter().enumerate() {
            steps[nat] = zz[pos];
        }
        Self::from_steps(steps)
    }
}

/// Quantized coefficient levels for one block (natural order).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizedBlock {
    pub levels: [i32; BLOCK_LEN],
}

impl QuantizedBlock {
    pub fn zero() -> Self {
        Self {
            levels: [0; BLOCK_LEN],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> i32 {
        self.levels[i * 8 + j]
    }
}

/// The Annex-K luminance table: entry (0,0)=16, (7,7)=99.
pub fn default_luma_table() -> QuantTable {
    QuantTable {
        steps: DEFAULT_LUMA,
    }
}

/// Scales a table by quantization factor `qf` in 1..=100 using the libjpeg
/// convention; qf=50 is the identity, larger qf means finer steps.
pub fn scale_by_qf(table: &QuantTable, qf: u32) -> Result<QuantTable, QuantError> {
    if !(1..=100).contains(&qf) {
        return Err(QuantError::QfOutOfRange(qf));
    }
    let scale = if qf < 50 { 5000 / qf } else { 200 - 2 * qf };
    let mut steps = [0u8; BLOCK_LEN];
    for (out, &entry) in steps.iter_mut().zip(table.steps.iter()) {
        let scaled = (entry as u32 * scale + 50) / 100;
        *out = scaled.clamp(1, 255) as u8;
    }
    Ok(QuantTable { steps })
}

fn round_away(v: f64) -> i32 {
    v.round() as i32
}

/// levels(i,j) = round(coeffs(i,j) / steps(i,j)), half away from zero.
pub fn quantize(block: &CoeffBlock, table: &QuantTable) -> QuantizedBlock {
    let mut out = QuantizedBlock::zero();
    for k in 0..BLOCK_LEN {
        out.levels[k] = round_away(block.coeffs[k] / table.steps[k] as f64);
    }
    out
}

/// coeffs(i,j) = levels(i,j) * steps(i,j).
pub fn dequantize(block: &QuantizedBlock, table: &QuantTable) -> CoeffBlock {
    let mut out = CoeffBlock::zero();
    for k in 0..BLOCK_LEN {
        out.coeffs[k] = block.levels[k] as f64 * table.steps[k] as f64;
    }
    out
}

/// Smallest integer step Q with Q > 16*eps.
///
/// Any spatial perturbation with max-norm at most eps has DCT coefficients
/// bounded by 8*eps in magnitude, so |C/Q| < 1/2 and every level rounds to
/// zero.
pub fn min_filtering_step(epsilon: f64) -> Result<u32, QuantError> {
    if epsilon.is_nan() || epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(QuantError::NonPositiveEpsilon(epsilon));
    }
    Ok((16.0 * epsilon).floor() as u32 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dct::{forward_dct, SpatialBlock};
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    #[test]
    fn default_table_constants() {
        let t = default_luma_table();
        assert_eq!(t.step(0, 0), 16);
        assert_eq!(t.step(7, 7), 99);
        assert!(t.steps().iter().all(|&s| (10..=121).contains(&s)));
    }

    #[test]
    fn qf_50_is_identity() {
        let t = default_luma_table();
        assert_eq!(scale_by_qf(&t, 50).unwrap(), t);
    }

    #[test]
    fn qf_100_clamps_to_one() {
        let t = scale_by_qf(&default_luma_table(), 100).unwrap();
        assert!(t.steps().iter().all(|&s| s == 1));
    }

    #[test]
    fn qf_90_scales_16_to_3() {
        let t = scale_by_qf(&default_luma_table(), 90).unwrap();
        assert_eq!(t.step(0, 0), 3);
    }

    #[test]
    fn qf_out_of_range() {
        assert!(matches!(
            scale_by_qf(&default_luma_table(), 0),
            Err(QuantError::QfOutOfRange(0))
        ));
        assert!(matches!(
            scale_by_qf(&default_luma_table(), 101),
            Err(QuantError::QfOutOfRange(101))
        ));
    }

    #[test]
    fn quantize_rounding_cases() {
        let t = QuantTable::uniform(40).unwrap();
        let mut c = CoeffBlock::zero();
        *c.at_mut(0, 0) = 25.0; // 0.625 -> 1
        *c.at_mut(0, 1) = 19.0; // 0.475 -> 0
        *c.at_mut(0, 2) = -20.0; // -0.5 -> -1 (half away from zero)
        let q = quantize(&c, &t);
        assert_eq!(q.at(0, 0), 1);
        assert_eq!(q.at(0, 1), 0);
        assert_eq!(q.at(0, 2), -1);
    }

    #[test]
    fn dequantize_cases() {
        let t = QuantTable::uniform(40).unwrap();
        let mut q = QuantizedBlock::zero();
        q.levels[0] = 1;
        let c = dequantize(&q, &t);
        assert_eq!(c.coeffs[0], 40.0);
        assert!(c.coeffs[1..].iter().all(|&v| v == 0.0));

        let zero = dequantize(&QuantizedBlock::zero(), &t);
        assert!(zero.coeffs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn min_filtering_step_values() {
        assert_eq!(min_filtering_step(2.0).unwrap(), 33);
        assert_eq!(min_filtering_step(0.5).unwrap(), 9);
        assert_eq!(min_filtering_step(1.0).unwrap(), 17);
        assert_eq!(min_filtering_step(8.0).unwrap(), 129);
        assert!(matches!(
            min_filtering_step(0.0),
            Err(QuantError::NonPositiveEpsilon(_))
        ));
        assert!(matches!(
            min_filtering_step(-1.0),
            Err(QuantError::NonPositiveEpsilon(_))
        ));
    }

    #[test]
    fn filtering_step_exhaustive_integer_range() {
        // eps=2: every integer coefficient in [-16,16] rounds to zero at
        // Q=33, and Q=32 fails exactly at |C|=16.
        let q = min_filtering_step(2.0).unwrap() as f64;
        for c in -16i32..=16 {
            assert_eq!(round_away(c as f64 / q), 0, "C={c}");
        }
        assert_eq!(round_away(16.0 / 32.0), 1);
        assert_eq!(round_away(-16.0 / 32.0), -1);
    }

    #[test]
    fn zigzag_serialization_roundtrip() {
        let t = default_luma_table();
        let zz = t.to_zigzag();
        // First zig-zag entries follow the scan: (0,0),(0,1),(1,0),(2,0)...
        assert_eq!(zz[0], 16);
        assert_eq!(zz[1], 11);
        assert_eq!(zz[2], 12);
        assert_eq!(zz[3], 14);
        assert_eq!(QuantTable::from_zigzag(&zz).unwrap(), t);
    }

    #[test]
    fn zero_step_rejected() {
        assert!(QuantTable::from_steps([0u8; BLOCK_LEN]).is_err());
        assert!(QuantTable::uniform(0).is_err());
        assert!(QuantTable::uniform(256).is_err());
    }

    /// Worst-case perturbation for band (u,v): eps times the sign of the
    /// basis function, which maximizes |C(u,v)| over eps-bounded blocks.
    pub(crate) fn sign_pattern_block(u: usize, v: usize, eps: f64) -> SpatialBlock {
        let mut b = SpatialBlock::zero();
        for x in 0..8 {
            for y in 0..8 {
                let w = ((2.0 * x as f64 + 1.0) * u as f64 * std::f64::consts::PI / 16.0).cos()
                    * ((2.0 * y as f64 + 1.0) * v as f64 * std::f64::consts::PI / 16.0).cos();
                *b.at_mut(x, y) = if w > 0.0 {
                    eps
                } else if w < 0.0 {
                    -eps
                } else {
                    0.0
                };
            }
        }
        b
    }

    #[test]
    fn filtering_guarantee_on_sign_patterns() {
        for eps in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let q = QuantTable::uniform(min_filtering_step(eps).unwrap()).unwrap();
            for u in 0..8 {
                for v in 0..8 {
                    let levels = quantize(&forward_dct(&sign_pattern_block(u, v, eps)), &q);
                    assert_eq!(
                        levels,
                        QuantizedBlock::zero(),
                        "eps={eps} pattern ({u},{v})"
                    );
                }
            }
        }
    }

    #[test]
    fn filtering_step_is_tight_at_dc() {
        for eps in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let q = min_filtering_step(eps).unwrap() - 1;
            let table = QuantTable::uniform(q).unwrap();
            let levels = quantize(&forward_dct(&SpatialBlock::constant(eps)), &table);
            assert_ne!(levels.at(0, 0), 0, "eps={eps}, Q-1={q} should leak DC");
        }
    }

    proptest! {
        #[test]
        fn filtering_guarantee_random(seed in any::<u64>(), eps in 0.1f64..8.0) {
            let mut rng = SplitMix64::new(seed);
            let q = QuantTable::uniform(min_filtering_step(eps).unwrap()).unwrap();
            let mut e = SpatialBlock::zero();
            for s in e.samples.iter_mut() {
                *s = rng.next_range(-eps, eps);
            }
            prop_assert_eq!(quantize(&forward_dct(&e), &q), QuantizedBlock::zero());
        }

        #[test]
        fn roundtrip_error_within_half_step(seed in any::<u64>(), step in 1u32..=255) {
            let mut rng = SplitMix64::new(seed);
            let t = QuantTable::uniform(step).unwrap();
            let mut c = CoeffBlock::zero();
            for v in c.coeffs.iter_mut() {
                *v = rng.next_range(-1020.0, 1020.0);
            }
            let back = dequantize(&quantize(&c, &t), &t);
            for k in 0..BLOCK_LEN {
                prop_assert!((back.coeffs[k] - c.coeffs[k]).abs() <= step as f64 / 2.0 + 1e-9);
            }
        }

        /// Separable-quantization bound: adding a coefficient perturbation
        /// smaller than half a step moves the level by at most one, and not
        /// at all when the clean value sits far enough from the rounding
        /// boundary (measured via the fractional part of |C|/Q + 1/2).
        #[test]
        fn approximation_bound(ci in -2000.0f64..2000.0, ce_frac in -0.99f64..0.99, step in 2u32..=255) {
            let q = step as f64;
            let ce = ce_frac * q / 2.0; // |ce| < Q/2
            let with = round_away((ci + ce) / q);
            let without = round_away(ci / q);
            prop_assert!((with - without).abs() <= 1);

            let margin = ce.abs() / q;
            let boundary_frac = (ci.abs() / q + 0.5).fract();
            if boundary_frac >= margin && boundary_frac < 1.0 - margin {
                prop_assert_eq!(with, without);
            }
        }
    }
}
