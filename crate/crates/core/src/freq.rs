//! Per-band coefficient statistics and two-band quantization table
//! synthesis.
//!
//! For every frequency band (i,j) the standard deviation of the
//! pre-quantized DCT coefficients across all blocks measures how much
//! image energy that band carries. The n highest-deviation bands form the
//! accuracy-sensitive (AS) band and receive a fine step `s2`; the rest form
//! the malicious-defense (MD) band and receive a coarse step `s1` that
//! rounds bounded perturbations to zero. Only the ordering of the
//! deviations matters, never their scale.

use crate::dct::{forward_dct, partition, zigzag_position, BlockGrid, CoeffBlock, BLOCK_LEN};
use crate::image_io::{rgb_to_ycbcr, PixelImage};
use crate::pipeline::requantize_image;
use crate::quant::{QuantError, QuantTable};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FreqError {
    #[error("band statistics need at least one block")]
    EmptyGrid,
    #[error("AS band size must be in 0..=64, got {0}")]
    BandSizeOutOfRange(usize),
    #[error(transparent)]
    Quant(#[from] QuantError),
}

/// Per-band population statistics of DCT coefficients over a set of blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStats {
    /// Population standard deviation per band, natural (row-major) order.
    pub sigma: [f64; BLOCK_LEN],
    /// Mean per band, retained for diagnostics.
    pub mean: [f64; BLOCK_LEN],
    pub block_count: usize,
}

impl BandStats {
    pub fn sigma_at(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * 8 + j]
    }
}

/// Streaming per-band accumulator (Welford), mergeable across images for
/// corpus-scope analysis.
#[derive(Debug, Clone)]
pub struct StatsAccumulator {
    count: usize,
    mean: [f64; BLOCK_LEN],
    m2: [f64; BLOCK_LEN],
}

impl Default for StatsAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self {
            count: 0,
            mean: [0.0; BLOCK_LEN],
            m2: [0.0; BLOCK_LEN],
        }
    }

    pub fn add_block(&mut self, block: &CoeffBlock) {
        self.count += 1;
        let n = self.count as f64;
        for k in 0..BLOCK_LEN {
            let delta = block.coeffs[k] - self.mean[k];
            self.mean[k] += delta / n;
            self.m2[k] += delta * (block.coeffs[k] - self.mean[k]);
        }
    }

    pub fn add_grid(&mut self, grid: &BlockGrid<CoeffBlock>) {
        for b in &grid.blocks {
            self.add_block(b);
        }
    }

    /// Adds the luma-plane coefficient blocks of an image.
    pub fn add_image(&mut self, img: &PixelImage) {
        let grid = luma_coeff_grid(img);
        self.add_grid(&grid);
    }

    pub fn finish(&self) -> Result<BandStats, FreqError> {
        if self.count == 0 {
            return Err(FreqError::EmptyGrid);
        }
        let mut sigma = [0.0; BLOCK_LEN];
        for k in 0..BLOCK_LEN {
            sigma[k] = (self.m2[k] / self.count as f64).sqrt();
        }
        Ok(BandStats {
            sigma,
            mean: self.mean,
            block_count: self.count,
        })
    }
}

/// DCT coefficient grid of the luma plane (the single plane for grayscale).
pub fn luma_coeff_grid(img: &PixelImage) -> BlockGrid<CoeffBlock> {
    let grid = if img.channels() == 3 {
        let ycc = rgb_to_ycbcr(img).expect("3-channel image");
        partition(ycc.plane(0), img.width(), img.height())
    } else {
        partition(img.plane(0), img.width(), img.height())
    };
    grid.map(forward_dct)
}

/// Population mean and standard deviation per band over all blocks.
pub fn analyze(grid: &BlockGrid<CoeffBlock>) -> Result<BandStats, FreqError> {
    let mut acc = StatsAccumulator::new();
    acc.add_grid(grid);
    acc.finish()
}

/// [`analyze`] over the luma plane of an image.
pub fn analyze_image(img: &PixelImage) -> BandStats {
    analyze(&luma_coeff_grid(img)).expect("image has at least one block")
}

/// The AS/MD split of the 64 frequency bands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandPartition {
    /// The n highest-deviation bands, sorted by zig-zag position.
    pub accuracy_sensitive: Vec<(usize, usize)>,
    /// The remaining bands, sorted by zig-zag position.
    pub malicious_defense: Vec<(usize, usize)>,
}

impl BandPartition {
    pub fn n(&self) -> usize {
        self.accuracy_sensitive.len()
    }

    pub fn is_accuracy_sensitive(&self, i: usize, j: usize) -> bool {
        self.accuracy_sensitive.contains(&(i, j))
    }
}

/// Parameters of the two-band discrete mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmParams {
    /// AS band size.
    pub n: usize,
    /// Coarse step for the MD band.
    pub s1: u8,
    /// Fine step for the AS band.
    pub s2: u8,
}

impl Default for DmParams {
    fn default() -> Self {
        Self {
            n: 15,
            s1: 40,
            s2: 1,
        }
    }
}

impl DmParams {
    pub fn validate(&self) -> Result<(), FreqError> {
        if self.n > BLOCK_LEN {
            return Err(FreqError::BandSizeOutOfRange(self.n));
        }
        if self.s1 == 0 {
            return Err(QuantError::StepOutOfRange(0).into());
        }
        if self.s2 == 0 {
            return Err(QuantError::StepOutOfRange(0).into());
        }
        Ok(())
    }
}

/// Splits bands into the n largest deviations (AS) and the rest (MD).
/// Ties break toward the lower zig-zag position, so the result is fully
/// determined by the deviation ordering.
pub fn rank_bands(stats: &BandStats, n: usize) -> Result<BandPartition, FreqError> {
    if n > BLOCK_LEN {
        return Err(FreqError::BandSizeOutOfRange(n));
    }
    let mut order: Vec<usize> = (0..BLOCK_LEN).collect();
    order.sort_by(|&a, &b| {
        stats.sigma[b]
            .partial_cmp(&stats.sigma[a])
            .expect("deviations are finite and non-negative")
            .then(zigzag_position(a).cmp(&zigzag_position(b)))
    });
    let mut split = [false; BLOCK_LEN];
    for &k in order.iter().take(n) {
        split[k] = true;
    }
    let by_zigzag = |selected: bool| {
        let mut v: Vec<(usize, usize)> = (0..BLOCK_LEN)
            .filter(|&k| split[k] == selected)
            .map(|k| (k / 8, k % 8))
            .collect();
        v.sort_by_key(|&(i, j)| zigzag_position(i * 8 + j));
        v
    };
    Ok(BandPartition {
        accuracy_sensitive: by_zigzag(true),
        malicious_defense: by_zigzag(false),
    })
}

/// Discrete mapping: step `s2` on the n highest-deviation bands, `s1`
/// everywhere else.
pub fn dm_table(stats: &BandStats, params: &DmParams) -> Result<QuantTable, FreqError> {
    params.validate()?;
    let split = rank_bands(stats, params.n)?;
    let mut steps = [params.s1; BLOCK_LEN];
    for &(i, j) in &split.accuracy_sensitive {
        steps[i * 8 + j] = params.s2;
    }
    Ok(QuantTable::from_steps(steps)?)
}

/// For each candidate AS band size, purifies every corpus image with the
/// per-image DM table and reports the accuracy of `classify` on the result.
pub fn sweep_top_n<E>(
    corpus: &[(PixelImage, usize)],
    mut classify: impl FnMut(&PixelImage) -> Result<usize, E>,
    n_values: &[usize],
    s1: u8,
    s2: u8,
) -> Result<Vec<(usize, f64)>, SweepError<E>> {
    if corpus.is_empty() {
        return Err(SweepError::EmptyCorpus);
    }
    let mut out = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let params = DmParams { n, s1, s2 };
        let mut correct = 0usize;
        for (img, label) in corpus {
            let stats = analyze_image(img);
            let table = dm_table(&stats, &params).map_err(SweepError::Freq)?;
            let purified = requantize_image(img, &table);
            if classify(&purified).map_err(SweepError::Classifier)? == *label {
                correct += 1;
            }
        }
        out.push((n, correct as f64 / corpus.len() as f64));
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum SweepError<E> {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Freq(FreqError),
    #[error("classifier error")]
    Classifier(#[source] E),
}

/// JSON form of [`BandStats`]: sigma and mean arrays in zig-zag order.
#[derive(Debug, Serialize, Deserialize)]
pub struct BandStatsJson {
    pub block_count: usize,
    pub sigma: Vec<f64>,
    pub mean: Vec<f64>,
}

impl From<&BandStats> for BandStatsJson {
    fn from(stats: &BandStats) -> Self {
        let reorder = |arr: &[f64; BLOCK_LEN]| {
            (0..BLOCK_LEN)
                .map(|pos| arr[crate::dct::ZIGZAG[pos]])
                .collect()
        };
        Self {
            block_count: stats.block_count,
            sigma: reorder(&stats.sigma),
            mean: reorder(&stats.mean),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dct::ZIGZAG;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn grid_of(blocks: Vec<CoeffBlock>) -> BlockGrid<CoeffBlock> {
        let n = blocks.len();
        BlockGrid {
            blocks,
            block_cols: n,
            block_rows: 1,
            orig_width: n * 8,
            orig_height: 8,
        }
    }

    fn random_coeff_block(rng: &mut SplitMix64) -> CoeffBlock {
        let mut c = CoeffBlock::zero();
        for v in c.coeffs.iter_mut() {
            *v = rng.next_range(-500.0, 500.0);
        }
        c
    }

    /// Plain two-pass mean/variance, kept deliberately separate from the
    /// streaming implementation under test.
    fn two_pass_stats(grid: &BlockGrid<CoeffBlock>) -> BandStats {
        let n = grid.blocks.len() as f64;
        let mut mean = [0.0; BLOCK_LEN];
        for b in &grid.blocks {
            for k in 0..BLOCK_LEN {
                mean[k] += b.coeffs[k];
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut sigma = [0.0; BLOCK_LEN];
        for b in &grid.blocks {
            for k in 0..BLOCK_LEN {
                let d = b.coeffs[k] - mean[k];
                sigma[k] += d * d;
            }
        }
        for s in sigma.iter_mut() {
            *s = (*s / n).sqrt();
        }
        BandStats {
            sigma,
            mean,
            block_count: grid.blocks.len(),
        }
    }

    fn stats_with_sigma(sigma: [f64; BLOCK_LEN]) -> BandStats {
        BandStats {
            sigma,
            mean: [0.0; BLOCK_LEN],
            block_count: 1,
        }
    }

    #[test]
    fn identical_blocks_zero_sigma() {
        let mut rng = SplitMix64::new(5);
        let b = random_coeff_block(&mut rng);
        let stats = analyze(&grid_of(vec![b, b, b])).unwrap();
        assert!(stats.sigma.iter().all(|&s| s.abs() < 1e-12));
        assert_eq!(stats.block_count, 3);
    }

    #[test]
    fn two_point_population_std() {
        let c = 12.5;
        let mut a = CoeffBlock::zero();
        let mut b = CoeffBlock::zero();
        *a.at_mut(0, 0) = c;
        *b.at_mut(0, 0) = -c;
        let stats = analyze(&grid_of(vec![a, b])).unwrap();
        assert!((stats.sigma_at(0, 0) - c).abs() < 1e-12);
        assert!((stats.mean[0]).abs() < 1e-12);
    }

    #[test]
    fn matches_two_pass_oracle() {
        let mut rng = SplitMix64::new(0xface);
        let blocks: Vec<CoeffBlock> = (0..100).map(|_| random_coeff_block(&mut rng)).collect();
        let grid = grid_of(blocks);
        let got = analyze(&grid).unwrap();
        let want = two_pass_stats(&grid);
        for k in 0..BLOCK_LEN {
            let tol = 1e-9 * want.sigma[k].abs().max(1.0);
            assert!(
                (got.sigma[k] - want.sigma[k]).abs() < tol,
                "sigma[{k}]: {} vs {}",
                got.sigma[k],
                want.sigma[k]
            );
            let mtol = 1e-9 * want.mean[k].abs().max(1.0);
            assert!((got.mean[k] - want.mean[k]).abs() < mtol);
        }
    }

    #[test]
    fn analyze_rejects_empty_grid() {
        let grid = BlockGrid::<CoeffBlock> {
            blocks: vec![],
            block_cols: 0,
            block_rows: 0,
            orig_width: 0,
            orig_height: 0,
        };
        assert!(matches!(analyze(&grid), Err(FreqError::EmptyGrid)));
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = SplitMix64::new(0xbeef);
        let blocks: Vec<CoeffBlock> = (0..32).map(|_| random_coeff_block(&mut rng)).collect();
        let mut reversed = blocks.clone();
        reversed.reverse();
        let a = analyze(&grid_of(blocks)).unwrap();
        let b = analyze(&grid_of(reversed)).unwrap();
        for k in 0..BLOCK_LEN {
            assert!((a.sigma[k] - b.sigma[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_extremes() {
        let stats = stats_with_sigma([1.0; BLOCK_LEN]);
        let none = rank_bands(&stats, 0).unwrap();
        assert!(none.accuracy_sensitive.is_empty());
        assert_eq!(none.malicious_defense.len(), 64);
        let all = rank_bands(&stats, 64).unwrap();
        assert_eq!(all.accuracy_sensitive.len(), 64);
        assert!(all.malicious_defense.is_empty());
        assert!(rank_bands(&stats, 65).is_err());
    }

    #[test]
    fn only_nonzero_deviations_rank() {
        let mut sigma = [0.0; BLOCK_LEN];
        for j in 0..4 {
            sigma[j] = 10.0 - j as f64;
        }
        let split = rank_bands(&stats_with_sigma(sigma), 4).unwrap();
        let expect: Vec<(usize, usize)> = vec![(0, 0), (0, 1), (0, 2), (0, 3)];
        assert_eq!(split.accuracy_sensitive, expect);
    }

    #[test]
    fn ties_break_by_zigzag_position() {
        // All-equal deviations: AS must be the first n zig-zag positions.
        let split = rank_bands(&stats_with_sigma([3.0; BLOCK_LEN]), 5).unwrap();
        let expect: Vec<(usize, usize)> = ZIGZAG[..5].iter().map(|&k| (k / 8, k % 8)).collect();
        assert_eq!(split.accuracy_sensitive, expect);
    }

    #[test]
    fn dm_table_default_shape() {
        let mut rng = SplitMix64::new(0x51);
        let mut sigma = [0.0; BLOCK_LEN];
        for s in sigma.iter_mut() {
            *s = rng.next_f64() * 100.0;
        }
        let t = dm_table(&stats_with_sigma(sigma), &DmParams::default()).unwrap();
        let ones = t.steps().iter().filter(|&&s| s == 1).count();
        let forties = t.steps().iter().filter(|&&s| s == 40).count();
        assert_eq!(ones, 15);
        assert_eq!(forties, 49);
    }

    #[test]
    fn dm_table_n0_is_uniform_defense() {
        let t = dm_table(
            &stats_with_sigma([1.0; BLOCK_LEN]),
            &DmParams {
                n: 0,
                ..DmParams::default()
            },
        )
        .unwrap();
        assert!(t.steps().iter().all(|&s| s == 40));
    }

    #[test]
    fn dm_table_single_max_band() {
        let mut sigma = [1.0; BLOCK_LEN];
        sigma[0] = 50.0;
        let t = dm_table(
            &stats_with_sigma(sigma),
            &DmParams {
                n: 1,
                ..DmParams::default()
            },
        )
        .unwrap();
        assert_eq!(t.step(0, 0), 1);
        assert_eq!(t.steps().iter().filter(|&&s| s == 1).count(), 1);
    }

    #[test]
    fn sweep_over_single_image_is_zero_or_one() {
        let img = crate::image_io::PixelImage::gray(8, 8, vec![100; 64]).unwrap();
        let corpus = vec![(img, 0usize)];
        let hit = sweep_top_n(
            &corpus,
            |_| Ok::<usize, std::convert::Infallible>(0),
            &[0, 15, 64],
            40,
            1,
        )
        .unwrap();
        assert!(hit.iter().all(|&(_, acc)| acc == 1.0));
        let miss = sweep_top_n(
            &corpus,
            |_| Ok::<usize, std::convert::Infallible>(2),
            &[15],
            40,
            1,
        )
        .unwrap();
        assert_eq!(miss, vec![(15, 0.0)]);
    }

    #[test]
    fn sweep_rejects_empty_corpus() {
        let result = sweep_top_n(
            &[],
            |_| Ok::<usize, std::convert::Infallible>(0),
            &[15],
            40,
            1,
        );
        assert!(matches!(result, Err(SweepError::EmptyCorpus)));
    }

    #[test]
    fn band_stats_json_zigzag_order() {
        let mut sigma = [0.0; BLOCK_LEN];
        let mut mean = [0.0; BLOCK_LEN];
        for k in 0..BLOCK_LEN {
            sigma[k] = k as f64;
            mean[k] = -(k as f64);
        }
        let json = BandStatsJson::from(&BandStats {
            sigma,
            mean,
            block_count: 7,
        });
        assert_eq!(json.block_count, 7);
        // Zig-zag positions 0..4 hold natural indices 0,1,8,16.
        assert_eq!(&json.sigma[..4], &[0.0, 1.0, 8.0, 16.0]);
        assert_eq!(json.mean[2], -8.0);
    }

    proptest! {
        #[test]
        fn argsort_invariance(seed in any::<u64>(), scale in 0.001f64..1000.0) {
            let mut rng = SplitMix64::new(seed);
            let mut sigma = [0.0; BLOCK_LEN];
            for s in sigma.iter_mut() {
                *s = rng.next_f64() * 10.0;
            }
            let mut scaled = sigma;
            for s in scaled.iter_mut() {
                *s *= scale;
            }
            let p = DmParams::default();
            let a = dm_table(&stats_with_sigma(sigma), &p).unwrap();
            let b = dm_table(&stats_with_sigma(scaled), &p).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn exactly_n_fine_entries(seed in any::<u64>(), n in 0usize..=64) {
            let mut rng = SplitMix64::new(seed);
            let mut sigma = [0.0; BLOCK_LEN];
            for s in sigma.iter_mut() {
                *s = rng.next_f64() * 10.0;
            }
            let p = DmParams { n, s1: 40, s2: 1 };
            let t = dm_table(&stats_with_sigma(sigma), &p).unwrap();
            prop_assert_eq!(t.steps().iter().filter(|&&s| s == 1).count(), n);
        }

        #[test]
        fn as_band_holds_largest_deviations(seed in any::<u64>(), n in 1usize..=63) {
            let mut rng = SplitMix64::new(seed);
            let mut sigma = [0.0; BLOCK_LEN];
            for s in sigma.iter_mut() {
                *s = rng.next_f64() * 10.0;
            }
            let stats = stats_with_sigma(sigma);
            let split = rank_bands(&stats, n).unwrap();
            let min_as = split
                .accuracy_sensitive
                .iter()
                .map(|&(i, j)| stats.sigma_at(i, j))
                .fold(f64::INFINITY, f64::min);
            let max_md = split
                .malicious_defense
                .iter()
                .map(|&(i, j)| stats.sigma_at(i, j))
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(min_as >= max_md);
        }
    }
}
