//! Gradient-sign attacks against the toy classifier.
//!
//! Epsilon and alpha are expressed in 0..255 pixel units. Outputs stay
//! valid 8-bit images: every pixel is kept inside both [0, 255] and the
//! epsilon ball around the original image, including after rounding.

use super::classifier::ToyClassifier;
use super::DefenseError;
use crate::image_io::PixelImage;

fn perturbed_pixel(orig: u8, value: f64, epsilon: f64) -> u8 {
    let lo = ((orig as f64 - epsilon).ceil()).max(0.0);
    let hi = ((orig as f64 + epsilon).floor()).min(255.0);
    value.round().clamp(lo, hi) as u8
}

fn apply_step(
    base: &PixelImage,
    current: &PixelImage,
    gradient: &[f64],
    step: f64,
    epsilon: f64,
) -> PixelImage {
    let n = base.width() * base.height();
    let planes: Vec<Vec<u8>> = current
        .planes()
        .iter()
        .enumerate()
        .map(|(p, plane)| {
            let orig = base.plane(p);
            plane
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let g = gradient[p * n + i];
                    let direction = if g > 0.0 {
                        1.0
                    } else if g < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    perturbed_pixel(orig[i], v as f64 + step * direction, epsilon)
                })
                .collect()
        })
        .collect();
    PixelImage::new(base.width(), base.height(), planes).expect("same shape")
}

/// Single-step gradient-sign attack: `x + epsilon * sign(grad L)`, clamped
/// to pixel range. `sign(0) = 0`.
pub fn fgsm(
    img: &PixelImage,
    label: usize,
    clf: &ToyClassifier,
    epsilon: f64,
) -> Result<PixelImage, DefenseError> {
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(DefenseError::BadAttackParam(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    let grad = clf.input_gradient(img, label)?;
    Ok(apply_step(img, img, &grad, epsilon, epsilon))
}

/// Iterative gradient-sign attack: repeats an `alpha`-sized step, keeping
/// the total perturbation inside the epsilon ball and stopping early once
/// the prediction flips.
pub fn bim(
    img: &PixelImage,
    label: usize,
    clf: &ToyClassifier,
    epsilon: f64,
    alpha: f64,
    iters: usize,
) -> Result<PixelImage, DefenseError> {
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(DefenseError::BadAttackParam(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    if alpha.is_nan() || alpha <= 0.0 || alpha > epsilon {
        return Err(DefenseError::BadAttackParam(format!(
            "alpha must satisfy 0 < alpha <= epsilon, got alpha={alpha} epsilon={epsilon}"
        )));
    }
    if iters == 0 {
        return Err(DefenseError::BadAttackParam("iters must be >= 1".into()));
    }
    let mut current = img.clone();
    for _ in 0..iters {
        if clf.predict(&current)? != label {
            break;
        }
        let grad = clf.input_gradient(&current, label)?;
        current = apply_step(img, &current, &grad, alpha, epsilon);
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defense::corpus::{synthetic_corpus, train_harness_classifier};

    fn setup() -> &'static (Vec<(PixelImage, usize)>, ToyClassifier) {
        static SETUP: std::sync::OnceLock<(Vec<(PixelImage, usize)>, ToyClassifier)> =
            std::sync::OnceLock::new();
        SETUP.get_or_init(|| {
            let corpus = synthetic_corpus(60, 3, 0x717);
            let clf = train_harness_classifier(&corpus, 3).unwrap();
            (corpus, clf)
        })
    }

    #[test]
    fn zero_epsilon_is_identity() {
        let (corpus, clf) = setup();
        let (img, label) = &corpus[0];
        assert_eq!(&fgsm(img, *label, clf, 0.0).unwrap(), img);
    }

    #[test]
    fn fgsm_moves_pixels_by_at_most_epsilon() {
        let (corpus, clf) = setup();
        for eps in [1.0, 2.0, 5.0] {
            let (img, label) = &corpus[1];
            let adv = fgsm(img, *label, clf, eps).unwrap();
            for p in 0..img.channels() {
                for (a, b) in img.plane(p).iter().zip(adv.plane(p)) {
                    let d = (*a as i16 - *b as i16).abs() as f64;
                    assert!(d <= eps, "pixel moved by {d} > {eps}");
                }
            }
        }
    }

    #[test]
    fn fgsm_deltas_are_sign_steps() {
        let (corpus, clf) = setup();
        let eps = 3.0;
        let (img, label) = &corpus[2];
        let adv = fgsm(img, *label, clf, eps).unwrap();
        for p in 0..img.channels() {
            for (i, (&a, &b)) in img.plane(p).iter().zip(adv.plane(p)).enumerate() {
                let d = (b as i16 - a as i16).abs();
                // Interior pixels move by exactly 0 or eps; clamping at the
                // 8-bit range can shorten a step.
                let interior = a as f64 >= eps && a as f64 <= 255.0 - eps;
                if interior {
                    assert!(d == 0 || d == eps as i16, "pixel {i} moved by {d}");
                }
            }
        }
    }

    #[test]
    fn bim_with_one_full_step_equals_fgsm() {
        let (corpus, clf) = setup();
        let eps = 4.0;
        for (img, label) in corpus.iter().take(6) {
            // BIM stops early once misclassified; compare on seeds where the
            // first step decides, i.e. always (iters=1 takes one step from
            // the clean image exactly like FGSM when still correct).
            if clf.predict(img).unwrap() != *label {
                continue;
            }
            let a = bim(img, *label, clf, eps, eps, 1).unwrap();
            let b = fgsm(img, *label, clf, eps).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bim_respects_epsilon_ball() {
        let (corpus, clf) = setup();
        let eps = 6.0;
        let (img, label) = &corpus[3];
        let adv = bim(img, *label, clf, eps, 2.0, 10).unwrap();
        for p in 0..img.channels() {
            for (a, b) in img.plane(p).iter().zip(adv.plane(p)) {
                assert!(((*a as i16) - (*b as i16)).abs() as f64 <= eps);
            }
        }
    }

    #[test]
    fn bad_params_rejected() {
        let (corpus, clf) = setup();
        let (img, label) = &corpus[0];
        assert!(fgsm(img, *label, clf, -1.0).is_err());
        assert!(bim(img, *label, clf, 4.0, 0.0, 5).is_err());
        assert!(bim(img, *label, clf, 4.0, 5.0, 5).is_err());
        assert!(bim(img, *label, clf, 4.0, 1.0, 0).is_err());
    }
}
