//! Baseline JFIF encoder: SOI, APP0, DQT, SOF0, DHT, SOS, entropy-coded
//! scan, EOI. Three-channel images are coded 4:4:4 in YCbCr with the same
//! quantization table in both DQT slots.

use super::huffman::{magnitude, BitWriter, HuffEncoder};
use super::{tables, JpegError};
use crate::dct::{forward_dct, partition, ZIGZAG};
use crate::image_io::{rgb_to_ycbcr, PixelImage};
use crate::quant::{quantize, QuantTable};

/// Quantized levels per component, one zig-zag-ordered block per entry in
/// block raster order. This is exactly what the scan encodes.
pub fn component_levels(img: &PixelImage, table: &QuantTable) -> Vec<Vec<[i32; 64]>> {
    let planes: Vec<Vec<u8>> = if img.channels() == 3 {
        let ycc = rgb_to_ycbcr(img).expect("3-channel image");
        ycc.planes().to_vec()
    } else {
        img.planes().to_vec()
    };
    planes
        .iter()
        .map(|plane| {
            partition(plane, img.width(), img.height())
                .blocks
                .iter()
                .map(|block| {
                    let q = quantize(&forward_dct(block), table);
                    let mut zz = [0i32; 64];
                    for (pos, &nat) in ZIGZAG.iter().enumerate() {
                        zz[pos] = q.levels[nat];
                    }
                    zz
                })
                .collect()
        })
        .collect()
}

fn push_marker(out: &mut Vec<u8>, marker: u16) {
    out.extend_from_slice(&marker.to_be_bytes());
}

fn push_segment(out: &mut Vec<u8>, marker: u16, payload: &[u8]) {
    push_marker(out, marker);
    let len = (payload.len() + 2) as u16;
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(payload);
}

fn dqt_payload(table: &QuantTable, id: u8) -> Vec<u8> {
    let mut payload = vec![id]; // Pq=0 (8-bit) in the high nibble.
    payload.extend_from_slice(&table.to_zigzag());
    payload
}

fn dht_payload(class: u8, id: u8, bits: &[u8; 16], vals: &[u8]) -> Vec<u8> {
    let mut payload = vec![(class << 4) | id];
    payload.extend_from_slice(bits);
    payload.extend_from_slice(vals);
    payload
}

struct BlockCoder<'a> {
    dc: &'a HuffEncoder,
    ac: &'a HuffEncoder,
    pred: i32,
}

impl<'a> BlockCoder<'a> {
    fn new(dc: &'a HuffEncoder, ac: &'a HuffEncoder) -> Self {
        Self { dc, ac, pred: 0 }
    }

    fn encode(&mut self, writer: &mut BitWriter, zz: &[i32; 64]) {
        let diff = zz[0] - self.pred;
        self.pred = zz[0];
        let (category, bits) = if diff == 0 { (0, 0) } else { magnitude(diff) };
        let (code, size) = self.dc.entry(category);
        writer.write(code, size);
        if category > 0 {
            writer.write(bits, category);
        }

        let last_nonzero = (1..64).rev().find(|&k| zz[k] != 0);
        let Some(last) = last_nonzero else {
            let (code, size) = self.ac.entry(0x00);
            writer.write(code, size);
            return;
        };
        let mut run = 0u8;
        for &level in &zz[1..=last] {
            if level == 0 {
                run += 1;
                if run == 16 {
                    let (code, size) = self.ac.entry(0xf0);
                    writer.write(code, size);
                    run = 0;
                }
                continue;
            }
            let (category, bits) = magnitude(level);
            let (code, size) = self.ac.entry((run << 4) | category);
            writer.write(code, size);
            writer.write(bits, category);
            run = 0;
        }
        if last != 63 {
            let (code, size) = self.ac.entry(0x00);
            writer.write(code, size);
        }
    }
}

/// Encodes an image as a baseline sequential JFIF stream carrying `table`
/// in its DQT segment(s).
pub fn encode(img: &PixelImage, table: &QuantTable) -> Result<Vec<u8>, JpegError> {
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 || w > 0xffff || h > 0xffff {
        return Err(JpegError::BadDimensions);
    }
    let ncomp = img.channels() as u8;
    let levels = component_levels(img, table);

    let mut out = Vec::new();
    push_marker(&mut out, tables::SOI);
    // APP0/JFIF 1.1, aspect-ratio density 1:1, no thumbnail.
    push_segment(
        &mut out,
        tables::APP0,
        &[b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0],
    );
    push_segment(&mut out, tables::DQT, &dqt_payload(table, 0));
    if ncomp == 3 {
        // Same table in the chroma slot: the synthesized bands apply to
        // every channel.
        push_segment(&mut out, tables::DQT, &dqt_payload(table, 1));
    }

    let mut sof = vec![8u8];
    sof.extend_from_slice(&(h as u16).to_be_bytes());
    sof.extend_from_slice(&(w as u16).to_be_bytes());
    sof.push(ncomp);
    for c in 0..ncomp {
        let tq = if c == 0 { 0 } else { 1 };
        sof.extend_from_slice(&[c + 1, 0x11, tq]);
    }
    push_segment(&mut out, tables::SOF0, &sof);

    push_segment(
        &mut out,
        tables::DHT,
        &dht_payload(0, 0, &tables::LUMA_DC_BITS, &tables::LUMA_DC_VALS),
    );
    push_segment(
        &mut out,
        tables::DHT,
        &dht_payload(1, 0, &tables::LUMA_AC_BITS, &tables::LUMA_AC_VALS),
    );
    if ncomp == 3 {
        push_segment(
            &mut out,
            tables::DHT,
            &dht_payload(0, 1, &tables::CHROMA_DC_BITS, &tables::CHROMA_DC_VALS),
        );
        push_segment(
            &mut out,
            tables::DHT,
            &dht_payload(1, 1, &tables::CHROMA_AC_BITS, &tables::CHROMA_AC_VALS),
        );
    }

    let mut sos = vec![ncomp];
    for c in 0..ncomp {
        let td_ta = if c == 0 { 0x00 } else { 0x11 };
        sos.extend_from_slice(&[c + 1, td_ta]);
    }
    sos.extend_from_slice(&[0, 63, 0]);
    push_segment(&mut out, tables::SOS, &sos);

    let luma_dc = HuffEncoder::new(&tables::LUMA_DC_BITS, &tables::LUMA_DC_VALS);
    let luma_ac = HuffEncoder::new(&tables::LUMA_AC_BITS, &tables::LUMA_AC_VALS);
    let chroma_dc = HuffEncoder::new(&tables::CHROMA_DC_BITS, &tables::CHROMA_DC_VALS);
    let chroma_ac = HuffEncoder::new(&tables::CHROMA_AC_BITS, &tables::CHROMA_AC_VALS);

    let mut coders: Vec<BlockCoder> = (0..ncomp as usize)
        .map(|c| {
            if c == 0 {
                BlockCoder::new(&luma_dc, &luma_ac)
            } else {
                BlockCoder::new(&chroma_dc, &chroma_ac)
            }
        })
        .collect();

    let mut writer = BitWriter::new();
    let mcus = levels[0].len();
    for mcu in 0..mcus {
        for (comp, coder) in coders.iter_mut().enumerate() {
            coder.encode(&mut writer, &levels[comp][mcu]);
        }
    }
    out.extend_from_slice(&writer.finish());
    push_marker(&mut out, tables::EOI);
    Ok(out)
}
