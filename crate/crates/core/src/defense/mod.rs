//! End-to-end purification, distortion metrics, and the desk-scale
//! attack/defense evaluation harness.

mod attack;
mod classifier;
pub mod corpus;

pub use attack::{bim, fgsm};
pub use classifier::{ModelJson, ToyClassifier};

use crate::freq::{analyze_image, dm_table, BandStats, DmParams, FreqError, StatsAccumulator};
use crate::image_io::PixelImage;
use crate::pipeline::requantize_image;
use crate::quant::{default_luma_table, scale_by_qf, QuantError, QuantTable};
use crate::rng::SplitMix64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DefenseError {
    #[error("image shape {got:?} does not match classifier input {expected:?} (w,h,channels)")]
    ShapeMismatch {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },
    #[error("images have different dimensions: {a:?} vs {b:?}")]
    DimensionMismatch {
        a: (usize, usize, usize),
        b: (usize, usize, usize),
    },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("classifier predicts no corpus example correctly; nothing to attack")]
    DegenerateClassifier,
    #[error("class weights must be non-negative and sum to 1, got p_l={p_l} p_m={p_m}")]
    BadClassWeights { p_l: f64, p_m: f64 },
    #[error("corpus-scope purification requires precomputed corpus statistics")]
    MissingCorpusStats,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("model JSON is inconsistent")]
    MalformedModel,
    #[error("{0}")]
    BadAttackParam(String),
    #[error(transparent)]
    Freq(#[from] FreqError),
    #[error(transparent)]
    Quant(#[from] QuantError),
}

/// How the quantization table for purification is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum PurifyMode {
    /// Two-band table from per-band deviation ranking.
    Dm(DmParams),
    /// One step for all 64 bands.
    Uniform { step: u32 },
    /// The standard luminance table scaled by a quantization factor.
    DefaultJpeg { qf: u32 },
}

/// Where DM-mode statistics come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisScope {
    /// Analyze the image being purified.
    PerImage,
    /// Use statistics accumulated over a corpus.
    Corpus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PurifyConfig {
    pub mode: PurifyMode,
    pub scope: AnalysisScope,
    /// Required when `scope` is [`AnalysisScope::Corpus`] and `mode` is DM.
    pub corpus_stats: Option<BandStats>,
}

impl PurifyConfig {
    pub fn dm(params: DmParams) -> Self {
        Self {
            mode: PurifyMode::Dm(params),
            scope: AnalysisScope::PerImage,
            corpus_stats: None,
        }
    }

    pub fn uniform(step: u32) -> Self {
        Self {
            mode: PurifyMode::Uniform { step },
            scope: AnalysisScope::PerImage,
            corpus_stats: None,
        }
    }

    pub fn default_jpeg(qf: u32) -> Self {
        Self {
            mode: PurifyMode::DefaultJpeg { qf },
            scope: AnalysisScope::PerImage,
            corpus_stats: None,
        }
    }

    fn table_for(&self, img: &PixelImage) -> Result<QuantTable, DefenseError> {
        match &self.mode {
            PurifyMode::Dm(params) => {
                let stats = match self.scope {
                    AnalysisScope::PerImage => analyze_image(img),
                    AnalysisScope::Corpus => self
                        .corpus_stats
                        .clone()
                        .ok_or(DefenseError::MissingCorpusStats)?,
                };
                Ok(dm_table(&stats, params)?)
            }
            PurifyMode::Uniform { step } => Ok(QuantTable::uniform(*step)?),
            PurifyMode::DefaultJpeg { qf } => Ok(scale_by_qf(&default_luma_table(), *qf)?),
        }
    }
}

/// Compress-decompress preprocessing with a caller-supplied table.
pub fn purify_with_table(img: &PixelImage, table: &QuantTable) -> PixelImage {
    requantize_image(img, table)
}

/// Full purification: color transform, DCT, table synthesis per config,
/// quantize/dequantize, inverse transform, clamp to 8-bit. Returns the
/// purified image and the table that was applied.
pub fn purify(
    img: &PixelImage,
    cfg: &PurifyConfig,
) -> Result<(PixelImage, QuantTable), DefenseError> {
    let table = cfg.table_for(img)?;
    Ok((requantize_image(img, &table), table))
}

/// Distortion between two images on the [0,1] sample scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionMetrics {
    /// Max absolute sample difference.
    pub l_inf: f64,
    /// Euclidean norm of the sample difference vector.
    pub l2: f64,
    /// Fraction of pixel positions where any channel differs.
    pub l0: f64,
}

pub fn distortion(a: &PixelImage, b: &PixelImage) -> Result<DistortionMetrics, DefenseError> {
    let shape = |img: &PixelImage| (img.width(), img.height(), img.channels());
    if shape(a) != shape(b) {
        return Err(DefenseError::DimensionMismatch {
            a: shape(a),
            b: shape(b),
        });
    }
    let mut max_diff = 0.0f64;
    let mut sq_sum = 0.0f64;
    let n = a.width() * a.height();
    let mut changed = 0usize;
    for i in 0..n {
        let mut any = false;
        for p in 0..a.channels() {
            let d = (a.plane(p)[i] as f64 - b.plane(p)[i] as f64) / 255.0;
            if d != 0.0 {
                any = true;
            }
            max_diff = max_diff.max(d.abs());
            sq_sum += d * d;
        }
        if any {
            changed += 1;
        }
    }
    Ok(DistortionMetrics {
        l_inf: max_diff,
        l2: sq_sum.sqrt(),
        l0: changed as f64 / n as f64,
    })
}

/// Attack applied by [`evaluate`] when crafting adversarial examples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackKind {
    Fgsm,
    Bim { alpha: f64, iters: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub kind: AttackKind,
    /// Perturbation budget in 0..255 pixel units.
    pub epsilon: f64,
    /// How many correctly-classified seeds to attack.
    pub max_seeds: usize,
    /// When set, seeds are sampled from the correct pool with this RNG
    /// seed; otherwise the first `max_seeds` in corpus order are used.
    pub seed: Option<u64>,
}

impl AttackConfig {
    pub fn fgsm(epsilon: f64) -> Self {
        Self {
            kind: AttackKind::Fgsm,
            epsilon,
            max_seeds: 100,
            seed: None,
        }
    }

    pub fn bim(epsilon: f64, alpha: f64, iters: usize) -> Self {
        Self {
            kind: AttackKind::Bim { alpha, iters },
            epsilon,
            max_seeds: 100,
            seed: None,
        }
    }

    fn craft(
        &self,
        img: &PixelImage,
        label: usize,
        clf: &ToyClassifier,
    ) -> Result<PixelImage, DefenseError> {
        match self.kind {
            AttackKind::Fgsm => fgsm(img, label, clf, self.epsilon),
            AttackKind::Bim { alpha, iters } => bim(img, label, clf, self.epsilon, alpha, iters),
        }
    }
}

/// Defense efficiency measurements over one corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefenseReport {
    /// Accuracy on purified benign inputs, whole corpus.
    pub acc_legal: f64,
    /// Accuracy on purified adversarial inputs, attacked seeds.
    pub acc_malicious: f64,
    /// Fraction of attacked seeds misclassified before purification.
    pub attack_success_before: f64,
    /// Fraction of attacked seeds misclassified after purification.
    pub attack_success_after: f64,
    /// `p_l * acc_legal + p_m * acc_malicious` when weights were supplied.
    pub weighted: Option<f64>,
    /// Number of seeds that were attacked.
    pub seeds: usize,
}

/// Report serialization with a fixed key order, carrying an arbitrary
/// configuration block.
#[derive(Debug, Serialize)]
pub struct ReportDocument<C: Serialize> {
    pub acc_legal: f64,
    pub acc_malicious: f64,
    pub attack_success_before: f64,
    pub attack_success_after: f64,
    pub weighted: Option<f64>,
    pub config: C,
}

impl DefenseReport {
    pub fn document<C: Serialize>(&self, config: C) -> ReportDocument<C> {
        ReportDocument {
            acc_legal: self.acc_legal,
            acc_malicious: self.acc_malicious,
            attack_success_before: self.attack_success_before,
            attack_success_after: self.attack_success_after,
            weighted: self.weighted,
            config,
        }
    }
}

/// Runs the full harness: attacks the first (or sampled) `max_seeds`
/// correctly-classified corpus images, purifies everything, and reports
/// accuracies and attack success rates.
pub fn evaluate(
    corpus: &[(PixelImage, usize)],
    clf: &ToyClassifier,
    attack: &AttackConfig,
    purify_cfg: &PurifyConfig,
    class_weights: Option<(f64, f64)>,
) -> Result<DefenseReport, DefenseError> {
    if corpus.is_empty() {
        return Err(DefenseError::EmptyCorpus);
    }
    if let Some((p_l, p_m)) = class_weights {
        if p_l < 0.0 || p_m < 0.0 || (p_l + p_m - 1.0).abs() > 1e-9 {
            return Err(DefenseError::BadClassWeights { p_l, p_m });
        }
    }

    // Corpus-scope DM shares one table derived from all corpus images.
    let cfg = match (purify_cfg.scope, &purify_cfg.mode) {
        (AnalysisScope::Corpus, PurifyMode::Dm(_)) if purify_cfg.corpus_stats.is_none() => {
            let mut acc = StatsAccumulator::new();
            for (img, _) in corpus {
                acc.add_image(img);
            }
            PurifyConfig {
                corpus_stats: Some(acc.finish()?),
                ..purify_cfg.clone()
            }
        }
        _ => purify_cfg.clone(),
    };

    let mut correct_seed_idx = Vec::new();
    let mut legal_correct = 0usize;
    for (idx, (img, label)) in corpus.iter().enumerate() {
        if clf.predict(img)? == *label {
            correct_seed_idx.push(idx);
        }
        let (purified, _) = purify(img, &cfg)?;
        if clf.predict(&purified)? == *label {
            legal_correct += 1;
        }
    }
    if correct_seed_idx.is_empty() {
        return Err(DefenseError::DegenerateClassifier);
    }

    let seeds: Vec<usize> = match attack.seed {
        None => correct_seed_idx
            .iter()
            .copied()
            .take(attack.max_seeds)
            .collect(),
        Some(seed) => {
            // Partial Fisher-Yates draw of max_seeds indices.
            let mut pool = correct_seed_idx.clone();
            let mut rng = SplitMix64::new(seed);
            let take = attack.max_seeds.min(pool.len());
            for i in 0..take {
                let j = i + rng.next_below((pool.len() - i) as u64) as usize;
                pool.swap(i, j);
            }
            pool.truncate(take);
            pool
        }
    };

    let mut success_before = 0usize;
    let mut success_after = 0usize;
    for &idx in &seeds {
        let (img, label) = &corpus[idx];
        let adversarial = attack.craft(img, *label, clf)?;
        if clf.predict(&adversarial)? != *label {
            success_before += 1;
        }
        let (purified, _) = purify(&adversarial, &cfg)?;
        if clf.predict(&purified)? != *label {
            success_after += 1;
        }
    }

    let n_seeds = seeds.len() as f64;
    let acc_legal = legal_correct as f64 / corpus.len() as f64;
    let acc_malicious = 1.0 - success_after as f64 / n_seeds;
    Ok(DefenseReport {
        acc_legal,
        acc_malicious,
        attack_success_before: success_before as f64 / n_seeds,
        attack_success_after: success_after as f64 / n_seeds,
        weighted: class_weights.map(|(p_l, p_m)| p_l * acc_legal + p_m * acc_malicious),
        seeds: seeds.len(),
    })
}

/// Harness over externally-supplied adversarial images: `adversarial[i]`
/// is the attacked version of `corpus[i]`. Seeds are the first `max_seeds`
/// correctly-classified clean images, as in [`evaluate`].
pub fn evaluate_paired(
    corpus: &[(PixelImage, usize)],
    adversarial: &[PixelImage],
    clf: &ToyClassifier,
    purify_cfg: &PurifyConfig,
    class_weights: Option<(f64, f64)>,
    max_seeds: usize,
) -> Result<DefenseReport, DefenseError> {
    if corpus.is_empty() {
        return Err(DefenseError::EmptyCorpus);
    }
    if adversarial.len() != corpus.len() {
        return Err(DefenseError::DimensionMismatch {
            a: (corpus.len(), 0, 0),
            b: (adversarial.len(), 0, 0),
        });
    }
    if let Some((p_l, p_m)) = class_weights {
        if p_l < 0.0 || p_m < 0.0 || (p_l + p_m - 1.0).abs() > 1e-9 {
            return Err(DefenseError::BadClassWeights { p_l, p_m });
        }
    }

    let cfg = match (purify_cfg.scope, &purify_cfg.mode) {
        (AnalysisScope::Corpus, PurifyMode::Dm(_)) if purify_cfg.corpus_stats.is_none() => {
            let mut acc = StatsAccumulator::new();
            for (img, _) in corpus {
                acc.add_image(img);
            }
            PurifyConfig {
                corpus_stats: Some(acc.finish()?),
                ..purify_cfg.clone()
            }
        }
        _ => purify_cfg.clone(),
    };

    let mut seeds = Vec::new();
    let mut legal_correct = 0usize;
    for (idx, (img, label)) in corpus.iter().enumerate() {
        if clf.predict(img)? == *label && seeds.len() < max_seeds {
            seeds.push(idx);
        }
        let (purified, _) = purify(img, &cfg)?;
        if clf.predict(&purified)? == *label {
            legal_correct += 1;
        }
    }
    if seeds.is_empty() {
        return Err(DefenseError::DegenerateClassifier);
    }

    let mut success_before = 0usize;
    let mut success_after = 0usize;
    for &idx in &seeds {
        let label = corpus[idx].1;
        let attacked = &adversarial[idx];
        if clf.predict(attacked)? != label {
            success_before += 1;
        }
        let (purified, _) = purify(attacked, &cfg)?;
        if clf.predict(&purified)? != label {
            success_after += 1;
        }
    }

    let n_seeds = seeds.len() as f64;
    let acc_legal = legal_correct as f64 / corpus.len() as f64;
    let acc_malicious = 1.0 - success_after as f64 / n_seeds;
    Ok(DefenseReport {
        acc_legal,
        acc_malicious,
        attack_success_before: success_before as f64 / n_seeds,
        attack_success_after: success_after as f64 / n_seeds,
        weighted: class_weights.map(|(p_l, p_m)| p_l * acc_legal + p_m * acc_malicious),
        seeds: seeds.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dct::{forward_dct, partition};
    use crate::defense::corpus::{synthetic_corpus, train_harness_classifier};
    use crate::quant::{min_filtering_step, quantize};
    use proptest::prelude::*;

    fn setup() -> &'static (Vec<(PixelImage, usize)>, ToyClassifier) {
        static SETUP: std::sync::OnceLock<(Vec<(PixelImage, usize)>, ToyClassifier)> =
            std::sync::OnceLock::new();
        SETUP.get_or_init(|| {
            let corpus = synthetic_corpus(60, 3, 0x5eed);
            let clf = train_harness_classifier(&corpus, 3).unwrap();
            (corpus, clf)
        })
    }

    #[test]
    fn uniform_step_one_is_near_identity() {
        let (corpus, _) = setup();
        let (img, _) = &corpus[0];
        let (purified, _) = purify(img, &PurifyConfig::uniform(1)).unwrap();
        for (a, b) in img.plane(0).iter().zip(purified.plane(0)) {
            assert!((*a as i16 - *b as i16).abs() <= 1);
        }
    }

    #[test]
    fn constant_gray_is_fixed_point() {
        let img = PixelImage::gray(16, 16, vec![128; 256]).unwrap();
        for cfg in [
            PurifyConfig::uniform(40),
            PurifyConfig::dm(DmParams::default()),
            PurifyConfig::default_jpeg(50),
        ] {
            let (purified, _) = purify(&img, &cfg).unwrap();
            assert_eq!(purified, img);
        }
    }

    #[test]
    fn purify_returns_expected_table_shapes() {
        let (corpus, _) = setup();
        let (img, _) = &corpus[0];
        let (_, t) = purify(img, &PurifyConfig::uniform(33)).unwrap();
        assert!(t.steps().iter().all(|&s| s == 33));
        let (_, t) = purify(img, &PurifyConfig::dm(DmParams::default())).unwrap();
        assert_eq!(t.steps().iter().filter(|&&s| s == 1).count(), 15);
        let (_, t) = purify(img, &PurifyConfig::default_jpeg(50)).unwrap();
        assert_eq!(t, default_luma_table());
    }

    #[test]
    fn corpus_scope_requires_stats() {
        let (corpus, _) = setup();
        let cfg = PurifyConfig {
            mode: PurifyMode::Dm(DmParams::default()),
            scope: AnalysisScope::Corpus,
            corpus_stats: None,
        };
        assert!(matches!(
            purify(&corpus[0].0, &cfg),
            Err(DefenseError::MissingCorpusStats)
        ));
    }

    #[test]
    fn distortion_identity_is_zero() {
        let (corpus, _) = setup();
        let m = distortion(&corpus[0].0, &corpus[0].0).unwrap();
        assert_eq!(m.l_inf, 0.0);
        assert_eq!(m.l2, 0.0);
        assert_eq!(m.l0, 0.0);
    }

    #[test]
    fn distortion_single_pixel_full_swing() {
        let a = PixelImage::gray(10, 10, vec![0; 100]).unwrap();
        let mut samples = vec![0u8; 100];
        samples[42] = 255;
        let b = PixelImage::gray(10, 10, samples).unwrap();
        let m = distortion(&a, &b).unwrap();
        assert_eq!(m.l_inf, 1.0);
        assert_eq!(m.l2, 1.0);
        assert_eq!(m.l0, 0.01);
    }

    #[test]
    fn distortion_all_pixels_one_level() {
        let n = 64usize;
        let a = PixelImage::gray(8, 8, vec![100; n]).unwrap();
        let b = PixelImage::gray(8, 8, vec![101; n]).unwrap();
        let m = distortion(&a, &b).unwrap();
        assert!((m.l_inf - 1.0 / 255.0).abs() < 1e-12);
        assert!((m.l2 - (n as f64).sqrt() / 255.0).abs() < 1e-12);
        assert_eq!(m.l0, 1.0);
    }

    #[test]
    fn distortion_dimension_mismatch() {
        let a = PixelImage::gray(2, 2, vec![0; 4]).unwrap();
        let b = PixelImage::gray(2, 3, vec![0; 6]).unwrap();
        assert!(matches!(
            distortion(&a, &b),
            Err(DefenseError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn evaluate_identity_purifier_keeps_raw_accuracy() {
        let (corpus, clf) = setup();
        let raw = corpus
            .iter()
            .filter(|(img, l)| clf.predict(img).unwrap() == *l)
            .count() as f64
            / corpus.len() as f64;
        let report = evaluate(
            corpus,
            clf,
            &AttackConfig::fgsm(0.0),
            &PurifyConfig::uniform(1),
            None,
        )
        .unwrap();
        assert!((report.acc_legal - raw).abs() < 1e-12);
        assert!(report.weighted.is_none());
    }

    #[test]
    fn evaluate_weight_degenerate_cases() {
        let (corpus, clf) = setup();
        let report = evaluate(
            corpus,
            clf,
            &AttackConfig::fgsm(2.0),
            &PurifyConfig::uniform(33),
            Some((1.0, 0.0)),
        )
        .unwrap();
        assert_eq!(report.weighted.unwrap(), report.acc_legal);

        assert!(matches!(
            evaluate(
                corpus,
                clf,
                &AttackConfig::fgsm(2.0),
                &PurifyConfig::uniform(33),
                Some((0.7, 0.7)),
            ),
            Err(DefenseError::BadClassWeights { .. })
        ));
    }

    #[test]
    fn evaluate_rejects_empty_corpus() {
        let (_, clf) = setup();
        assert!(matches!(
            evaluate(
                &[],
                clf,
                &AttackConfig::fgsm(1.0),
                &PurifyConfig::uniform(1),
                None
            ),
            Err(DefenseError::EmptyCorpus)
        ));
    }

    #[test]
    fn degenerate_classifier_reported() {
        let (corpus, clf) = setup();
        // Relabel everything away from the predicted classes so no seed
        // is correctly classified.
        let mislabeled: Vec<(PixelImage, usize)> = corpus
            .iter()
            .take(6)
            .map(|(img, _)| {
                let wrong = (clf.predict(img).unwrap() + 1) % 3;
                (img.clone(), wrong)
            })
            .collect();
        assert!(matches!(
            evaluate(
                &mislabeled,
                clf,
                &AttackConfig::fgsm(1.0),
                &PurifyConfig::uniform(1),
                None,
            ),
            Err(DefenseError::DegenerateClassifier)
        ));
    }

    #[test]
    fn paired_evaluation_matches_internal_crafting() {
        let (corpus, clf) = setup();
        let attack = AttackConfig::fgsm(3.0);
        let adversarial: Vec<PixelImage> = corpus
            .iter()
            .map(|(img, label)| fgsm(img, *label, clf, 3.0).unwrap())
            .collect();
        let cfg = PurifyConfig::uniform(49);
        let internal = evaluate(corpus, clf, &attack, &cfg, None).unwrap();
        let paired = evaluate_paired(corpus, &adversarial, clf, &cfg, None, 100).unwrap();
        assert_eq!(internal, paired);
    }

    #[test]
    fn paired_evaluation_rejects_length_mismatch() {
        let (corpus, clf) = setup();
        let short: Vec<PixelImage> = corpus.iter().take(2).map(|(img, _)| img.clone()).collect();
        assert!(matches!(
            evaluate_paired(corpus, &short, clf, &PurifyConfig::uniform(1), None, 100),
            Err(DefenseError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn seeded_subset_is_deterministic() {
        let (corpus, clf) = setup();
        let mut attack = AttackConfig::fgsm(2.0);
        attack.max_seeds = 10;
        attack.seed = Some(99);
        let a = evaluate(corpus, clf, &attack, &PurifyConfig::uniform(33), None).unwrap();
        let b = evaluate(corpus, clf, &attack, &PurifyConfig::uniform(33), None).unwrap();
        assert_eq!(a, b);
    }

    /// Eq-level restatement of the purification equivalence: clean blocks
    /// whose coefficients sit at bin centers absorb any eps-bounded
    /// perturbation without changing a single quantized level.
    #[test]
    fn perturbation_equivalence_through_pipeline() {
        let eps = 2.0;
        let step = min_filtering_step(eps).unwrap();

        // Constant blocks at exact multiples of step/8 have DC at a bin
        // center and all ACs at zero, and survive u8 rounding exactly.
        let mut plane = vec![0u8; 16 * 16];
        let levels = [128u8, 161, 95, 194];
        for (b, &v) in levels.iter().enumerate() {
            let (by, bx) = (b / 2, b % 2);
            for r in 0..8 {
                for c in 0..8 {
                    plane[(by * 8 + r) * 16 + bx * 8 + c] = v;
                }
            }
        }
        let clean = PixelImage::gray(16, 16, plane.clone()).unwrap();

        // Worst-case sign perturbation: +eps everywhere.
        let adv_plane: Vec<u8> = plane.iter().map(|&v| (v as f64 + eps) as u8).collect();
        let adv = PixelImage::gray(16, 16, adv_plane).unwrap();

        let cfg = PurifyConfig::uniform(step);
        let (p_clean, _) = purify(&clean, &cfg).unwrap();
        let (p_adv, _) = purify(&adv, &cfg).unwrap();
        assert_eq!(p_clean, p_adv);
        assert_eq!(p_clean, clean);
    }

    proptest! {
        #[test]
        fn distortion_is_symmetric(seed in any::<u64>()) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let a: Vec<u8> = (0..64).map(|_| rng.next_u64() as u8).collect();
            let b: Vec<u8> = (0..64).map(|_| rng.next_u64() as u8).collect();
            let ia = PixelImage::gray(8, 8, a).unwrap();
            let ib = PixelImage::gray(8, 8, b).unwrap();
            let m1 = distortion(&ia, &ib).unwrap();
            let m2 = distortion(&ib, &ia).unwrap();
            prop_assert_eq!(m1, m2);
            prop_assert!(m1.l2 >= m1.l_inf);
        }

        /// With uniform tables the fraction of zeroed AC coefficients never
        /// decreases as the step grows.
        #[test]
        fn monotone_ac_zeroing(seed in any::<u64>()) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let plane: Vec<u8> = (0..64 * 4).map(|_| rng.next_u64() as u8).collect();
            let grid = partition(&plane, 16, 16).map(forward_dct);
            let mut prev = -1.0f64;
            for step in [1u32, 4, 16, 40, 120, 255] {
                let t = QuantTable::uniform(step).unwrap();
                let mut zeros = 0usize;
                let mut total = 0usize;
                for b in &grid.blocks {
                    let q = quantize(b, &t);
                    for k in 1..64 {
                        total += 1;
                        if q.levels[k] == 0 {
                            zeros += 1;
                        }
                    }
                }
                let frac = zeros as f64 / total as f64;
                prop_assert!(frac >= prev);
                prev = frac;
            }
        }
    }
}
