//! Baseline JFIF decoder for the streams this crate emits plus any other
//! baseline sequential, Huffman-coded, 4:4:4 or grayscale file.

use super::huffman::{extend, BitReader, HuffDecoder};
use super::{tables, JpegError};
use crate::dct::{inverse_dct, BlockGrid, SpatialBlock, ZIGZAG};
use crate::image_io::{ycbcr_to_rgb, PixelImage};
use crate::quant::{dequantize, QuantTable, QuantizedBlock};

/// Entropy-decoded scan content before dequantization.
pub struct DecodedLevels {
    pub width: usize,
    pub height: usize,
    /// Per component: one zig-zag-ordered block per MCU in raster order.
    pub components: Vec<Vec<[i32; 64]>>,
    /// Quantization table referenced by the first (luma) component.
    pub luma_table: QuantTable,
    /// Table per component, for reconstruction.
    tables_per_component: Vec<QuantTable>,
}

struct Parser<'a> {
    data: &'a [u8],
    pos: usize,
}

struct Component {
    quant_id: u8,
}

impl<'a> Parser<'a> {
    fn u8(&mut self) -> Result<u8, JpegError> {
        let b = *self
            .data
            .get(self.pos)
            .ok_or(JpegError::Truncated { offset: self.pos })?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16, JpegError> {
        Ok(((self.u8()? as u16) << 8) | self.u8()? as u16)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], JpegError> {
        if self.pos + n > self.data.len() {
            return Err(JpegError::Truncated { offset: self.pos });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    /// Reads a marker, skipping optional 0xFF fill bytes.
    fn marker(&mut self) -> Result<(u16, usize), JpegError> {
        let offset = self.pos;
        let hi = self.u8()?;
        if hi != 0xff {
            return Err(JpegError::BadMarker {
                marker: hi as u16,
                offset,
            });
        }
        let mut lo = self.u8()?;
        while lo == 0xff {
            lo = self.u8()?;
        }
        Ok((0xff00 | lo as u16, offset))
    }
}

pub fn decode_levels(bytes: &[u8]) -> Result<DecodedLevels, JpegError> {
    let mut p = Parser {
        data: bytes,
        pos: 0,
    };
    let (soi, offset) = p.marker()?;
    if soi != tables::SOI {
        return Err(JpegError::BadMarker {
            marker: soi,
            offset,
        });
    }

    let mut quant: Vec<Option<QuantTable>> = vec![None; 4];
    let mut dc_decoders: Vec<Option<HuffDecoder>> = (0..4).map(|_| None).collect();
    let mut ac_decoders: Vec<Option<HuffDecoder>> = (0..4).map(|_| None).collect();
    let mut frame: Option<(usize, usize, Vec<Component>)> = None;

    loop {
        let (marker, offset) = p.marker()?;
        match marker {
            tables::SOS => break,
            tables::EOI => {
                return Err(JpegError::MalformedSegment {
                    offset,
                    reason: "end of image before scan data".into(),
                })
            }
            tables::SOF0 => {
                let seg = read_segment(&mut p)?;
                frame = Some(parse_sof(seg, offset)?);
            }
            0xffc2 => return Err(JpegError::UnsupportedProgressive { sof: 2, offset }),
            0xffc1 | 0xffc3 | 0xffc5 | 0xffc6 | 0xffc7 | 0xffcd | 0xffce | 0xffcf => {
                return Err(JpegError::Unsupported {
                    feature: "non-baseline frame type",
                    offset,
                })
            }
            0xffc9..=0xffcb => {
                return Err(JpegError::UnsupportedArithmetic {
                    sof: (marker & 0x0f) as u8 - 8,
                    offset,
                })
            }
            0xffcc => {
                return Err(JpegError::UnsupportedArithmetic { sof: 0, offset });
            }
            tables::DQT => {
                let seg = read_segment(&mut p)?;
                parse_dqt(seg, offset, &mut quant)?;
            }
            tables::DHT => {
                let seg = read_segment(&mut p)?;
                parse_dht(seg, offset, &mut dc_decoders, &mut ac_decoders)?;
            }
            tables::DRI => {
                let seg = read_segment(&mut p)?;
                if seg.len() != 2 || seg != [0, 0] {
                    return Err(JpegError::Unsupported {
                        feature: "restart markers",
                        offset,
                    });
                }
            }
            m if (0xffe0..=0xffef).contains(&m) || m == tables::COM => {
                read_segment(&mut p)?;
            }
            m => return Err(JpegError::BadMarker { marker: m, offset }),
        }
    }

    let sos_offset = p.pos - 2;
    let Some((width, height, components)) = frame else {
        return Err(JpegError::MalformedSegment {
            offset: sos_offset,
            reason: "scan before frame header".into(),
        });
    };

    // SOS header.
    let seg = read_segment(&mut p)?;
    if seg.len() < 4 {
        return Err(JpegError::MalformedSegment {
            offset: sos_offset,
            reason: "scan header too short".into(),
        });
    }
    let ns = seg[0] as usize;
    if ns != components.len() {
        return Err(JpegError::Unsupported {
            feature: "partial-component scans",
            offset: sos_offset,
        });
    }
    if seg.len() != 1 + 2 * ns + 3 {
        return Err(JpegError::MalformedSegment {
            offset: sos_offset,
            reason: "scan header length mismatch".into(),
        });
    }
    let mut scan_tables = Vec::with_capacity(ns);
    for k in 0..ns {
        let td_ta = seg[2 + 2 * k];
        scan_tables.push(((td_ta >> 4) as usize, (td_ta & 0x0f) as usize));
    }
    let (ss, se, ah_al) = (seg[1 + 2 * ns], seg[2 + 2 * ns], seg[3 + 2 * ns]);
    if (ss, se, ah_al) != (0, 63, 0) {
        return Err(JpegError::UnsupportedProgressive {
            sof: 0,
            offset: sos_offset,
        });
    }

    let block_cols = width.div_ceil(8);
    let block_rows = height.div_ceil(8);
    let mcus = block_cols * block_rows;

    let mut reader = BitReader::new(&bytes[p.pos..], p.pos);
    let mut levels: Vec<Vec<[i32; 64]>> = (0..ns).map(|_| Vec::with_capacity(mcus)).collect();
    let mut preds = vec![0i32; ns];
    for _ in 0..mcus {
        for comp in 0..ns {
            let (td, ta) = scan_tables[comp];
            let dc = dc_decoders[td]
                .as_ref()
                .ok_or(JpegError::MalformedSegment {
                    offset: sos_offset,
                    reason: format!("scan references undefined DC table {td}"),
                })?;
            let ac = ac_decoders[ta]
                .as_ref()
                .ok_or(JpegError::MalformedSegment {
                    offset: sos_offset,
                    reason: format!("scan references undefined AC table {ta}"),
                })?;
            let mut zz = [0i32; 64];
            let category = dc.decode(&mut reader)?;
            let bits = reader.read_bits(category)?;
            preds[comp] += extend(bits, category);
            zz[0] = preds[comp];

            let mut k = 1usize;
            while k < 64 {
                let rs = ac.decode(&mut reader)?;
                let (run, size) = (rs >> 4, rs & 0x0f);
                if size == 0 {
                    if rs == 0x00 {
                        break; // EOB
                    }
                    if rs == 0xf0 {
                        k += 16;
                        continue;
                    }
                    return Err(JpegError::MalformedSegment {
                        offset: reader.position(),
                        reason: format!("invalid AC symbol {rs:#04x}"),
                    });
                }
                k += run as usize;
                if k >= 64 {
                    return Err(JpegError::MalformedSegment {
                        offset: reader.position(),
                        reason: "AC run overflows block".into(),
                    });
                }
                let bits = reader.read_bits(size)?;
                zz[k] = extend(bits, size);
                k += 1;
            }
            levels[comp].push(zz);
        }
    }
    let scan_end = p.pos + reader.consumed();

    // Past the entropy data the stream must close with EOI (fill bytes
    // allowed).
    let mut tail = Parser {
        data: bytes,
        pos: scan_end,
    };
    let (marker, offset) = tail
        .marker()
        .map_err(|_| JpegError::TruncatedScan { offset: scan_end })?;
    if marker != tables::EOI {
        return Err(JpegError::BadMarker { marker, offset });
    }

    let tables_per_component: Vec<QuantTable> = components
        .iter()
        .map(|c| {
            quant[c.quant_id as usize].ok_or(JpegError::MalformedSegment {
                offset: sos_offset,
                reason: format!("frame references undefined quant table {}", c.quant_id),
            })
        })
        .collect::<Result<_, _>>()?;

    Ok(DecodedLevels {
        width,
        height,
        components: levels,
        luma_table: tables_per_component[0],
        tables_per_component,
    })
}

/// Decodes to pixels and returns the luma quantization table alongside.
pub fn decode(bytes: &[u8]) -> Result<(PixelImage, QuantTable), JpegError> {
    let decoded = decode_levels(bytes)?;
    let (w, h) = (decoded.width, decoded.height);
    let block_cols = w.div_ceil(8);
    let block_rows = h.div_ceil(8);

    let mut planes = Vec::with_capacity(decoded.components.len());
    for (comp, blocks) in decoded.components.iter().enumerate() {
        let table = &decoded.tables_per_component[comp];
        let spatial: Vec<SpatialBlock> = blocks
            .iter()
            .map(|zz| {
                let mut q = QuantizedBlock::zero();
                for (pos, &nat) in ZIGZAG.iter().enumerate() {
                    q.levels[nat] = zz[pos];
                }
                inverse_dct(&dequantize(&q, table))
            })
            .collect();
        let grid = BlockGrid {
            blocks: spatial,
            block_cols,
            block_rows,
            orig_width: w,
            orig_height: h,
        };
        planes.push(crate::dct::reassemble(&grid));
    }

    let img = PixelImage::new(w, h, planes).map_err(|_| JpegError::BadDimensions)?;
    let img = if img.channels() == 3 {
        ycbcr_to_rgb(&img).expect("3-channel image")
    } else {
        img
    };
    Ok((img, decoded.luma_table))
}

fn read_segment<'a>(p: &mut Parser<'a>) -> Result<&'a [u8], JpegError> {
    let offset = p.pos;
    let len = p.u16()? as usize;
    if len < 2 {
        return Err(JpegError::MalformedSegment {
            offset,
            reason: "segment length below 2".into(),
        });
    }
    p.take(len - 2)
}

fn parse_sof(seg: &[u8], offset: usize) -> Result<(usize, usize, Vec<Component>), JpegError> {
    if seg.len() < 6 {
        return Err(JpegError::MalformedSegment {
            offset,
            reason: "frame header too short".into(),
        });
    }
    if seg[0] != 8 {
        return Err(JpegError::Unsupported {
            feature: "sample precision other than 8",
            offset,
        });
    }
    let height = ((seg[1] as usize) << 8) | seg[2] as usize;
    let width = ((seg[3] as usize) << 8) | seg[4] as usize;
    if width == 0 || height == 0 {
        return Err(JpegError::MalformedSegment {
            offset,
            reason: "zero frame dimensions".into(),
        });
    }
    let ncomp = seg[5] as usize;
    if ncomp != 1 && ncomp != 3 {
        return Err(JpegError::UnsupportedSubsampling { offset });
    }
    if seg.len() != 6 + 3 * ncomp {
        return Err(JpegError::MalformedSegment {
            offset,
            reason: "frame header length mismatch".into(),
        });
    }
    let mut comps = Vec::with_capacity(ncomp);
    for k in 0..ncomp {
        let h_v = seg[7 + 3 * k];
        if h_v != 0x11 {
            return Err(JpegError::UnsupportedSubsampling { offset });
        }
        let quant_id = seg[8 + 3 * k];
        if quant_id > 3 {
            return Err(JpegError::MalformedSegment {
                offset,
                reason: format!("quant table id {quant_id} out of range"),
            });
        }
        comps.push(Component { quant_id });
    }
    Ok((width, height, comps))
}

fn parse_dqt(seg: &[u8], offset: usize, quant: &mut [Option<QuantTable>]) -> Result<(), JpegError> {
    let mut pos = 0usize;
    while pos < seg.len() {
        let pq_tq = seg[pos];
        pos += 1;
        let (pq, tq) = (pq_tq >> 4, (pq_tq & 0x0f) as usize);
        if pq != 0 {
            return Err(JpegError::Unsupported {
                feature: "16-bit quantization tables",
                offset,
            });
        }
        if tq > 3 {
            return Err(JpegError::MalformedSegment {
                offset,
                reason: format!("quant table id {tq} out of range"),
            });
        }
        if pos + 64 > seg.len() {
            return Err(JpegError::MalformedSegment {
                offset,
                reason: "quant table payload truncated".into(),
            });
        }
        let mut zz = [0u8; 64];
        zz.copy_from_slice(&seg[pos..pos + 64]);
        pos += 64;
        let table = QuantTable::from_zigzag(&zz).map_err(|_| JpegError::MalformedSegment {
            offset,
            reason: "quant table contains a zero step".into(),
        })?;
        quant[tq] = Some(table);
    }
    Ok(())
}

fn parse_dht(
    seg: &[u8],
    offset: usize,
    dc: &mut [Option<HuffDecoder>],
    ac: &mut [Option<HuffDecoder>],
) -> Result<(), JpegError> {
    let mut pos = 0usize;
    while pos < seg.len() {
        if pos + 17 > seg.len() {
            return Err(JpegError::MalformedSegment {
                offset,
                reason: "huffman table header truncated".into(),
            });
        }
        let tc_th = seg[pos];
        let (tc, th) = (tc_th >> 4, (tc_th & 0x0f) as usize);
        if tc > 1 || th > 3 {
            return Err(JpegError::MalformedSegment {
                offset,
                reason: format!("huffman table class/id {tc}/{th} out of range"),
            });
        }
        let mut bits = [0u8; 16];
        bits.copy_from_slice(&seg[pos + 1..pos + 17]);
        pos += 17;
        let count: usize = bits.iter().map(|&b| b as usize).sum();
        if pos + count > seg.len() {
            return Err(JpegError::MalformedSegment {
                offset,
                reason: "huffman values truncated".into(),
            });
        }
        let values = seg[pos..pos + count].to_vec();
        pos += count;
        let decoder = HuffDecoder::new(&bits, values);
        if tc == 0 {
            dc[th] = Some(decoder);
        } else {
            ac[th] = Some(decoder);
        }
    }
    Ok(())
}
