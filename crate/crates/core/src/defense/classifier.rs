//! Multinomial-logistic toy classifier over flattened pixels.
//!
//! Linear scores keep the loss gradient with respect to the input exact
//! and in closed form, which is all the gradient-sign attacks need.
//! Training is deterministic: zero initialization and full-batch gradient
//! descent, no sampling anywhere.

use super::DefenseError;
use crate::image_io::PixelImage;
use serde::{Deserialize, Serialize};

/// Linear softmax classifier: `classes` score maps over `width * height *
/// channels` pixels, each scaled to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ToyClassifier {
    width: usize,
    height: usize,
    channels: usize,
    classes: usize,
    /// Row-major `classes x dims`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

/// On-disk model format: plain JSON so models stay inspectable.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelJson {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub classes: usize,
    pub biases: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

impl ToyClassifier {
    pub fn dims(&self) -> usize {
        self.width * self.height * self.channels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn input_shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    fn check_image(&self, img: &PixelImage) -> Result<(), DefenseError> {
        if img.width() != self.width
            || img.height() != self.height
            || img.channels() != self.channels
        {
            return Err(DefenseError::ShapeMismatch {
                expected: (self.width, self.height, self.channels),
                got: (img.width(), img.height(), img.channels()),
            });
        }
        Ok(())
    }

    /// Flattens an image plane by plane into centered features in
    /// [-128/255, 127/255]. The positive 1/255 scale keeps pixel-space and
    /// feature-space gradient signs identical.
    pub fn features(&self, img: &PixelImage) -> Result<Vec<f64>, DefenseError> {
        self.check_image(img)?;
        let mut out = Vec::with_capacity(self.dims());
        for plane in img.planes() {
            out.extend(plane.iter().map(|&v| (v as f64 - 128.0) / 255.0));
        }
        Ok(out)
    }

    pub fn logits(&self, features: &[f64]) -> Vec<f64> {
        let d = features.len();
        (0..self.classes)
            .map(|c| {
                let row = &self.weights[c * d..(c + 1) * d];
                row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + self.biases[c]
            })
            .collect()
    }

    fn softmax(logits: &[f64]) -> Vec<f64> {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / sum).collect()
    }

    /// Argmax class; ties break toward the lower index.
    pub fn predict(&self, img: &PixelImage) -> Result<usize, DefenseError> {
        let logits = self.logits(&self.features(img)?);
        let mut best = 0;
        for (c, &z) in logits.iter().enumerate() {
            if z > logits[best] {
                best = c;
            }
        }
        Ok(best)
    }

    /// Cross-entropy loss of the softmax scores at a feature vector.
    pub fn loss_at(&self, features: &[f64], label: usize) -> f64 {
        let logits = self.logits(features);
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        lse - logits[label]
    }

    /// Closed-form gradient of the loss with respect to the features:
    /// `W^T (softmax(z) - onehot(label))`.
    pub fn gradient_at(&self, features: &[f64], label: usize) -> Vec<f64> {
        let probs = Self::softmax(&self.logits(features));
        let d = features.len();
        let mut grad = vec![0.0; d];
        for c in 0..self.classes {
            let coef = probs[c] - if c == label { 1.0 } else { 0.0 };
            let row = &self.weights[c * d..(c + 1) * d];
            for (g, w) in grad.iter_mut().zip(row) {
                *g += coef * w;
            }
        }
        grad
    }

    /// Gradient of the loss with respect to the image pixels, flattened
    /// plane by plane. Pixel scale differs from feature scale only by the
    /// positive factor 1/255, so signs are shared.
    pub fn input_gradient(&self, img: &PixelImage, label: usize) -> Result<Vec<f64>, DefenseError> {
        let features = self.features(img)?;
        Ok(self.gradient_at(&features, label))
    }

    /// Deterministic full-batch gradient descent from zero weights, with
    /// L2 weight decay. Decay bounds the weight growth on separable data
    /// and suppresses weights on label-independent dimensions.
    pub fn train(
        corpus: &[(PixelImage, usize)],
        classes: usize,
        epochs: usize,
        learning_rate: f64,
        weight_decay: f64,
    ) -> Result<Self, DefenseError> {
        let (first, _) = corpus.first().ok_or(DefenseError::EmptyCorpus)?;
        let (width, height, channels) = (first.width(), first.height(), first.channels());
        let mut clf = Self {
            width,
            height,
            channels,
            classes,
            weights: vec![0.0; classes * width * height * channels],
            biases: vec![0.0; classes],
        };
        let d = clf.dims();
        let mut features = Vec::with_capacity(corpus.len());
        for (img, label) in corpus {
            if *label >= classes {
                return Err(DefenseError::LabelOutOfRange {
                    label: *label,
                    classes,
                });
            }
            features.push((clf.features(img)?, *label));
        }

        let inv_n = 1.0 / corpus.len() as f64;
        for _ in 0..epochs {
            let mut grad_w = vec![0.0; classes * d];
            let mut grad_b = vec![0.0; classes];
            for (x, label) in &features {
                let probs = Self::softmax(&clf.logits(x));
                for c in 0..classes {
                    let coef = (probs[c] - if c == *label { 1.0 } else { 0.0 }) * inv_n;
                    grad_b[c] += coef;
                    let row = &mut grad_w[c * d..(c + 1) * d];
                    for (g, v) in row.iter_mut().zip(x) {
                        *g += coef * v;
                    }
                }
            }
            for (w, g) in clf.weights.iter_mut().zip(&grad_w) {
                *w -= learning_rate * (g + weight_decay * *w);
            }
            for (b, g) in clf.biases.iter_mut().zip(&grad_b) {
                *b -= learning_rate * g;
            }
        }
        Ok(clf)
    }

    pub fn to_model_json(&self) -> ModelJson {
        let d = self.dims();
        ModelJson {
            width: self.width,
            height: self.height,
            channels: self.channels,
            classes: self.classes,
            biases: self.biases.clone(),
            weights: (0..self.classes)
                .map(|c| self.weights[c * d..(c + 1) * d].to_vec())
                .collect(),
        }
    }

    pub fn from_model_json(json: &ModelJson) -> Result<Self, DefenseError> {
        let d = json.width * json.height * json.channels;
        if json.classes == 0
            || json.biases.len() != json.classes
            || json.weights.len() != json.classes
            || json.weights.iter().any(|row| row.len() != d)
        {
            return Err(DefenseError::MalformedModel);
        }
        if json.channels != 1 && json.channels != 3 {
            return Err(DefenseError::MalformedModel);
        }
        Ok(Self {
            width: json.width,
            height: json.height,
            channels: json.channels,
            classes: json.classes,
            weights: json.weights.concat(),
            biases: json.biases.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defense::corpus::{synthetic_corpus, train_harness_classifier};
    use crate::rng::SplitMix64;

    fn trained() -> &'static (Vec<(PixelImage, usize)>, ToyClassifier) {
        static SETUP: std::sync::OnceLock<(Vec<(PixelImage, usize)>, ToyClassifier)> =
            std::sync::OnceLock::new();
        SETUP.get_or_init(|| {
            let corpus = synthetic_corpus(60, 3, 0xabc);
            let clf = train_harness_classifier(&corpus, 3).unwrap();
            (corpus, clf)
        })
    }

    #[test]
    fn training_separates_synthetic_classes() {
        let (corpus, clf) = trained();
        let correct = corpus
            .iter()
            .filter(|(img, label)| clf.predict(img).unwrap() == *label)
            .count();
        assert!(
            correct as f64 / corpus.len() as f64 > 0.95,
            "only {correct}/{} correct",
            corpus.len()
        );
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (corpus, clf) = trained();
        let mut rng = SplitMix64::new(0x9d);
        let h = 1e-5;
        for (img, label) in corpus.iter().take(10) {
            let x = clf.features(img).unwrap();
            let grad = clf.gradient_at(&x, *label);
            for _ in 0..16 {
                let d = rng.next_below(x.len() as u64) as usize;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[d] += h;
                xm[d] -= h;
                let numeric = (clf.loss_at(&xp, *label) - clf.loss_at(&xm, *label)) / (2.0 * h);
                let denom = grad[d].abs().max(1e-2);
                assert!(
                    (grad[d] - numeric).abs() / denom < 1e-4,
                    "dim {d}: analytic {} vs numeric {numeric}",
                    grad[d]
                );
            }
        }
    }

    #[test]
    fn model_json_roundtrip() {
        let (_, clf) = trained();
        let json = serde_json::to_string(&clf.to_model_json()).unwrap();
        let parsed: ModelJson = serde_json::from_str(&json).unwrap();
        let back = ToyClassifier::from_model_json(&parsed).unwrap();
        assert_eq!(&back, clf);
    }

    #[test]
    fn malformed_model_rejected() {
        let bad = ModelJson {
            width: 4,
            height: 4,
            channels: 1,
            classes: 2,
            biases: vec![0.0; 2],
            weights: vec![vec![0.0; 15], vec![0.0; 16]],
        };
        assert!(matches!(
            ToyClassifier::from_model_json(&bad),
            Err(DefenseError::MalformedModel)
        ));
    }

    #[test]
    fn shape_mismatch_detected() {
        let (_, clf) = trained();
        let img = PixelImage::gray(4, 4, vec![0; 16]).unwrap();
        assert!(matches!(
            clf.predict(&img),
            Err(DefenseError::ShapeMismatch { .. })
        ));
    }
}
