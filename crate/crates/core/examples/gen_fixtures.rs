//! Generates a classifier model, a labeled corpus directory, and sample
//! images for exercising the CLI:
//!
//! ```text
//! cargo run --release --example gen_fixtures -- out/
//! ```
//!
//! Writes `out/model.json`, `out/corpus/` (PGM files plus labels.txt) and
//! `out/sample.pgm`, all deterministic.

use purejpeg::defense::corpus::{synthetic_corpus, train_harness_classifier};
use purejpeg::image_io::write_pnm;
use std::path::PathBuf;

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "fixtures".into())
        .into();
    let corpus_dir = out.join("corpus");
    std::fs::create_dir_all(&corpus_dir).expect("create output directory");

    let corpus = synthetic_corpus(600, 3, 0xfeed_beef);
    let clf = train_harness_classifier(&corpus, 3).expect("training");

    let model = serde_json::to_string(&clf.to_model_json()).expect("model json");
    std::fs::write(out.join("model.json"), model).expect("write model");

    let mut labels = String::new();
    for (idx, (img, label)) in corpus.iter().enumerate() {
        labels.push_str(&format!("{label}\n"));
        let name = format!("img_{idx:04}.pgm");
        std::fs::write(corpus_dir.join(name), write_pnm(img)).expect("write image");
    }
    std::fs::write(corpus_dir.join("labels.txt"), labels).expect("write labels");

    std::fs::write(out.join("sample.pgm"), write_pnm(&corpus[0].0)).expect("write sample");
    println!(
        "wrote model.json, corpus/ ({} images) and sample.pgm under {}",
        corpus.len(),
        out.display()
    );
}
