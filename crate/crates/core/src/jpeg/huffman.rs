//! Huffman code derivation (Annex C) plus the bit-level writer and reader
//! with 0xFF byte stuffing.

use super::JpegError;

/// Per-symbol code/length lookup for encoding.
pub struct HuffEncoder {
    code: [u16; 256],
    size: [u8; 256],
}

impl HuffEncoder {
    pub fn new(bits: &[u8; 16], vals: &[u8]) -> Self {
        // huffsize/huffcode generation per the standard.
        let mut sizes = Vec::new();
        for (i, &count) in bits.iter().enumerate() {
            for _ in 0..count {
                sizes.push((i + 1) as u8);
            }
        }
        let mut codes = Vec::with_capacity(sizes.len());
        let mut code = 0u16;
        let mut prev_size = sizes.first().copied().unwrap_or(0);
        for &size in &sizes {
            while size > prev_size {
                code <<= 1;
                prev_size += 1;
            }
            codes.push(code);
            code += 1;
        }
        let mut enc = Self {
            code: [0; 256],
            size: [0; 256],
        };
        for ((&val, &code), &size) in vals.iter().zip(&codes).zip(&sizes) {
            enc.code[val as usize] = code;
            enc.size[val as usize] = size;
        }
        enc
    }

    pub fn entry(&self, symbol: u8) -> (u16, u8) {
        debug_assert!(
            self.size[symbol as usize] != 0,
            "symbol {symbol:#x} unmapped"
        );
        (self.code[symbol as usize], self.size[symbol as usize])
    }
}

/// Canonical decoding tables: mincode/maxcode/valptr per code length.
pub struct HuffDecoder {
    mincode: [i32; 17],
    maxcode: [i32; 17],
    valptr: [usize; 17],
    values: Vec<u8>,
}

impl HuffDecoder {
    pub fn new(bits: &[u8; 16], values: Vec<u8>) -> Self {
        let mut mincode = [0i32; 17];
        let mut maxcode = [-1i32; 17];
        let mut valptr = [0usize; 17];
        let mut code = 0i32;
        let mut k = 0usize;
        for len in 1..=16usize {
            valptr[len] = k;
            mincode[len] = code;
            let count = bits[len - 1] as usize;
            code += count as i32;
            k += count;
            maxcode[len] = if count > 0 { code - 1 } else { -1 };
            code <<= 1;
        }
        Self {
            mincode,
            maxcode,
            valptr,
            values,
        }
    }

    pub fn decode(&self, reader: &mut BitReader<'_>) -> Result<u8, JpegError> {
        let mut code = 0i32;
        for len in 1..=16usize {
            code = (code << 1) | reader.read_bit()? as i32;
            if self.maxcode[len] >= 0 && code <= self.maxcode[len] && code >= self.mincode[len] {
                let idx = self.valptr[len] + (code - self.mincode[len]) as usize;
                return self
                    .values
                    .get(idx)
                    .copied()
                    .ok_or(JpegError::TruncatedScan {
                        offset: reader.position(),
                    });
            }
        }
        Err(JpegError::TruncatedScan {
            offset: reader.position(),
        })
    }
}

/// MSB-first bit writer with 0xFF00 stuffing; the final partial byte is
/// padded with 1 bits.
pub struct BitWriter {
    out: Vec<u8>,
    buffer: u32,
    nbits: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self {
            out: Vec::new(),
            buffer: 0,
            nbits: 0,
        }
    }

    pub fn write(&mut self, code: u16, size: u8) {
        debug_assert!((1..=16).contains(&size));
        self.buffer = (self.buffer << size) | (code as u32 & ((1u32 << size) - 1));
        self.nbits += size as u32;
        while self.nbits >= 8 {
            let byte = (self.buffer >> (self.nbits - 8)) as u8;
            self.out.push(byte);
            if byte == 0xff {
                self.out.push(0x00);
            }
            self.nbits -= 8;
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.write(((1u32 << pad) - 1) as u16, pad as u8);
        }
        self.out
    }
}

/// MSB-first bit reader over entropy-coded data. Stuffed 0xFF00 pairs read
/// as a plain 0xFF byte; any other marker inside the scan is an error.
pub struct BitReader<'a> {
    data: &'a [u8],
    /// Absolute offset of `data[0]` in the whole file, for error messages.
    base: usize,
    pos: usize,
    buffer: u32,
    nbits: u32,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8], base: usize) -> Self {
        Self {
            data,
            base,
            pos: 0,
            buffer: 0,
            nbits: 0,
        }
    }

    pub fn position(&self) -> usize {
        self.base + self.pos
    }

    fn fill(&mut self) -> Result<(), JpegError> {
        let byte = *self.data.get(self.pos).ok_or(JpegError::TruncatedScan {
            offset: self.position(),
        })?;
        self.pos += 1;
        if byte == 0xff {
            match self.data.get(self.pos) {
                Some(0x00) => self.pos += 1,
                Some(_) | None => {
                    return Err(JpegError::TruncatedScan {
                        offset: self.position(),
                    })
                }
            }
        }
        self.buffer = (self.buffer << 8) | byte as u32;
        self.nbits += 8;
        Ok(())
    }

    pub fn read_bit(&mut self) -> Result<u8, JpegError> {
        if self.nbits == 0 {
            self.fill()?;
        }
        self.nbits -= 1;
        Ok(((self.buffer >> self.nbits) & 1) as u8)
    }

    pub fn read_bits(&mut self, count: u8) -> Result<u32, JpegError> {
        let mut v = 0u32;
        for _ in 0..count {
            v = (v << 1) | self.read_bit()? as u32;
        }
        Ok(v)
    }

    /// Bytes consumed so far, rounding the current partial byte up.
    pub fn consumed(&self) -> usize {
        self.pos
    }
}

/// Two's-complement style magnitude decoding ("EXTEND" in the standard).
pub fn extend(bits: u32, category: u8) -> i32 {
    if category == 0 {
        return 0;
    }
    let v = bits as i32;
    if v < (1 << (category - 1)) {
        v - (1 << category) + 1
    } else {
        v
    }
}

/// Magnitude category and payload bits for a nonzero coefficient.
pub fn magnitude(v: i32) -> (u8, u16) {
    let abs = v.unsigned_abs();
    let category = (32 - abs.leading_zeros()) as u8;
    let bits = if v < 0 {
        ((v - 1) as u32 & ((1u32 << category) - 1)) as u16
    } else {
        v as u16
    };
    (category, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jpeg::tables;

    #[test]
    fn annex_k_dc_codes() {
        let enc = HuffEncoder::new(&tables::LUMA_DC_BITS, &tables::LUMA_DC_VALS);
        // Category 0 is the two-bit code 00; category 5 is 110.
        assert_eq!(enc.entry(0), (0b00, 2));
        assert_eq!(enc.entry(5), (0b110, 3));
    }

    #[test]
    fn annex_k_ac_eob_and_zrl() {
        let enc = HuffEncoder::new(&tables::LUMA_AC_BITS, &tables::LUMA_AC_VALS);
        assert_eq!(enc.entry(0x00), (0b1010, 4)); // EOB
        assert_eq!(enc.entry(0xf0), (0b11111111001, 11)); // ZRL
    }

    #[test]
    fn magnitude_examples() {
        assert_eq!(magnitude(1), (1, 1));
        assert_eq!(magnitude(-1), (1, 0));
        assert_eq!(magnitude(16), (5, 16));
        assert_eq!(magnitude(-16), (5, 15));
        assert_eq!(magnitude(2047), (11, 2047));
    }

    #[test]
    fn extend_inverts_magnitude() {
        for v in -2047i32..=2047 {
            if v == 0 {
                continue;
            }
            let (cat, bits) = magnitude(v);
            assert_eq!(extend(bits as u32, cat), v, "value {v}");
        }
    }

    #[test]
    fn writer_stuffs_ff() {
        let mut w = BitWriter::new();
        w.write(0xff, 8);
        w.write(0xd8, 8);
        assert_eq!(w.finish(), vec![0xff, 0x00, 0xd8]);
    }

    #[test]
    fn writer_pads_with_ones() {
        let mut w = BitWriter::new();
        w.write(0b101, 3);
        assert_eq!(w.finish(), vec![0b1011_1111]);
    }

    #[test]
    fn reader_roundtrips_writer() {
        let mut w = BitWriter::new();
        let pattern: Vec<(u16, u8)> = vec![(0b1, 1), (0xff, 8), (0b0110, 4), (0x3ff, 10)];
        for &(code, size) in &pattern {
            w.write(code, size);
        }
        let bytes = w.finish();
        let mut r = BitReader::new(&bytes, 0);
        for &(code, size) in &pattern {
            assert_eq!(r.read_bits(size).unwrap(), code as u32);
        }
    }

    #[test]
    fn decoder_decodes_what_encoder_emits() {
        let enc = HuffEncoder::new(&tables::LUMA_AC_BITS, &tables::LUMA_AC_VALS);
        let dec = HuffDecoder::new(&tables::LUMA_AC_BITS, tables::LUMA_AC_VALS.to_vec());
        let mut w = BitWriter::new();
        let symbols = [0x00u8, 0x01, 0xf0, 0x11, 0xfa, 0x04];
        for &s in &symbols {
            let (code, size) = enc.entry(s);
            w.write(code, size);
        }
        let bytes = w.finish();
        let mut r = BitReader::new(&bytes, 0);
        for &s in &symbols {
            assert_eq!(dec.decode(&mut r).unwrap(), s);
        }
    }
}
