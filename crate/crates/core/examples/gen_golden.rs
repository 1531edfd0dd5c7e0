//! One-off generator for the golden codec fixtures under tests/fixtures.

use purejpeg::defense::{purify, PurifyConfig};
use purejpeg::image_io::{write_pnm, PixelImage};
use purejpeg::jpeg::encode;
use purejpeg::quant::{default_luma_table, scale_by_qf, QuantTable};
use purejpeg::rng::SplitMix64;
use std::path::PathBuf;

fn main() {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| ".".into()).into();
    std::fs::create_dir_all(&out).unwrap();

    let gradient = gradient_image(40, 25);
    let texture = texture_image(64, 48);
    let color = color_image(32, 32);

    std::fs::write(out.join("gradient.pgm"), write_pnm(&gradient)).unwrap();
    std::fs::write(out.join("texture.pgm"), write_pnm(&texture)).unwrap();
    std::fs::write(out.join("color.ppm"), write_pnm(&color)).unwrap();

    let qf90 = scale_by_qf(&default_luma_table(), 90).unwrap();
    std::fs::write(
        out.join("gradient_qf90.jpg"),
        encode(&gradient, &qf90).unwrap(),
    )
    .unwrap();

    let uniform = QuantTable::uniform(40).unwrap();
    std::fs::write(
        out.join("texture_q40.jpg"),
        encode(&texture, &uniform).unwrap(),
    )
    .unwrap();

    let (_, dm) = purify(&color, &PurifyConfig::dm(Default::default())).unwrap();
    std::fs::write(out.join("color_dm.jpg"), encode(&color, &dm).unwrap()).unwrap();

    println!("golden fixtures written to {}", out.display());
}

fn gradient_image(w: usize, h: usize) -> PixelImage {
    let mut samples = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            samples[y * w + x] = (255 * (x + y) / (w + h - 2)) as u8;
        }
    }
    PixelImage::gray(w, h, samples).unwrap()
}

fn texture_image(w: usize, h: usize) -> PixelImage {
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

fn color_image(w: usize, h: usize) -> PixelImage {
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
