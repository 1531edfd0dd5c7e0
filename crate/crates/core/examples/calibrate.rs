//! Oracle run for harness numbers; prints the measurements that get frozen
//! into the acceptance suite.

use purejpeg::defense::{
    corpus::{synthetic_corpus, train_harness_classifier},
    evaluate, AnalysisScope, AttackConfig, PurifyConfig, PurifyMode,
};
use purejpeg::freq::sweep_top_n;
use purejpeg::image_io::PixelImage;
use purejpeg::jpeg::{decode, encode};
use purejpeg::quant::{default_luma_table, min_filtering_step, scale_by_qf};
use purejpeg::rng::SplitMix64;

fn main() {
    let corpus = synthetic_corpus(600, 3, 0xfeed_beef);
    let clf = train_harness_classifier(&corpus, 3).unwrap();

    let raw_acc = corpus
        .iter()
        .filter(|(img, l)| clf.predict(img).unwrap() == *l)
        .count() as f64
        / corpus.len() as f64;
    println!("raw accuracy: {raw_acc:.4}");

    let eps = 3.0;
    let q = min_filtering_step(eps).unwrap();
    let uni = evaluate(
        &corpus,
        &clf,
        &AttackConfig::fgsm(eps),
        &PurifyConfig::uniform(q),
        None,
    )
    .unwrap();
    let dm = evaluate(
        &corpus,
        &clf,
        &AttackConfig::fgsm(eps),
        &PurifyConfig::dm(Default::default()),
        None,
    )
    .unwrap();
    println!(
        "eps={eps} Q={q}: before={:.3} uni_after={:.3} uni_acc={:.4} dm_after={:.3} dm_acc={:.4}",
        uni.attack_success_before,
        uni.attack_success_after,
        uni.acc_legal,
        dm.attack_success_after,
        dm.acc_legal
    );

    // Corpus-scope DM for comparison.
    let corpus_cfg = PurifyConfig {
        mode: PurifyMode::Dm(Default::default()),
        scope: AnalysisScope::Corpus,
        corpus_stats: None,
    };
    let dmc = evaluate(&corpus, &clf, &AttackConfig::fgsm(eps), &corpus_cfg, None).unwrap();
    println!(
        "corpus-scope dm: after={:.3} acc={:.4}",
        dmc.attack_success_after, dmc.acc_legal
    );

    // BIM vs FGSM.
    for e in [2.0f64, 3.0] {
        let fg = evaluate(
            &corpus,
            &clf,
            &AttackConfig::fgsm(e),
            &PurifyConfig::uniform(1),
            None,
        )
        .unwrap();
        let bi = evaluate(
            &corpus,
            &clf,
            &AttackConfig::bim(e, 1.0, 10),
            &PurifyConfig::uniform(1),
            None,
        )
        .unwrap();
        println!(
            "eps={e}: fgsm_success={:.3} bim_success={:.3}",
            fg.attack_success_before, bi.attack_success_before
        );
    }

    // sweep_top_n on a slice (per-image analysis dominates the cost).
    let slice = &corpus[..30];
    let sweep = sweep_top_n(slice, |img| clf.predict(img), &[0, 15, 64], 40, 1).unwrap();
    println!("sweep n/acc: {sweep:?}");

    // PSNR of a QF90 default-table roundtrip on textured images.
    let img = textured(128, 96);
    let table = scale_by_qf(&default_luma_table(), 90).unwrap();
    let bytes = encode(&img, &table).unwrap();
    let (back, _) = decode(&bytes).unwrap();
    let mut se = 0.0f64;
    for (a, b) in img.plane(0).iter().zip(back.plane(0)) {
        let d = *a as f64 - *b as f64;
        se += d * d;
    }
    let mse = se / img.plane(0).len() as f64;
    let psnr = 10.0 * (255.0f64 * 255.0 / mse).log10();
    println!(
        "qf90 roundtrip psnr: {psnr:.2} dB (gray {}x{})",
        img.width(),
        img.height()
    );

    let rgbimg = textured_rgb(64, 64);
    let bytes = encode(&rgbimg, &table).unwrap();
    let (back, _) = decode(&bytes).unwrap();
    let mut se = 0.0f64;
    let mut n = 0usize;
    for p in 0..3 {
        for (a, b) in rgbimg.plane(p).iter().zip(back.plane(p)) {
            let d = *a as f64 - *b as f64;
            se += d * d;
            n += 1;
        }
    }
    let psnr = 10.0 * (255.0f64 * 255.0 / (se / n as f64)).log10();
    println!("qf90 roundtrip psnr: {psnr:.2} dB (rgb 64x64)");
}

fn textured(w: usize, h: usize) -> PixelImage {
    let mut rng = SplitMix64::new(0x9031);
    let mut samples = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let gradient = 40.0 + 170.0 * (x as f64 / w as f64);
            let wave = 18.0 * ((y as f64 / 6.0).sin() + (x as f64 / 9.0).cos());
            let noise = rng.next_range(-6.0, 6.0);
            samples[y * w + x] = (gradient + wave + noise).round().clamp(0.0, 255.0) as u8;
        }
    }
    PixelImage::gray(w, h, samples).unwrap()
}

fn textured_rgb(w: usize, h: usize) -> PixelImage {
    let mut rng = SplitMix64::new(0x9032);
    let mut planes = vec![vec![0u8; w * h]; 3];
    for y in 0..h {
        for x in 0..w {
            let base = 30.0 + 80.0 * (y as f64 / h as f64);
            for (p, plane) in planes.iter_mut().enumerate() {
                let phase = p as f64 * 1.7;
                let wave = 25.0 * ((x as f64 / (5.0 + p as f64) + phase).sin());
                let noise = rng.next_range(-5.0, 5.0);
                plane[y * w + x] = (base + wave + noise + p as f64 * 40.0)
                    .round()
                    .clamp(0.0, 255.0) as u8;
            }
        }
    }
    PixelImage::new(w, h, planes).unwrap()
}
