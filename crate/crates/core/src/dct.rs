//! 8x8 block partitioning, level shift, orthonormal 2D DCT-II and its
//! inverse, and the zig-zag coefficient order.
//!
//! The transform is float64 throughout and exact up to rounding noise;
//! quantization is the only lossy stage of the pipeline. Edge blocks are
//! padded by replicating the last row/column so borders do not inject
//! artificial high-frequency energy into band statistics.

use std::sync::OnceLock;

pub const BLOCK_DIM: usize = 8;
pub const BLOCK_LEN: usize = 64;

/// Natural (row-major) coefficient index at each zig-zag position.
pub const ZIGZAG: [usize; BLOCK_LEN] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20,
    13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59,
    52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Zig-zag position of each natural (row-major) coefficient index.
pub fn zigzag_position(natural: usize) -> usize {
    static INV: OnceLock<[usize; BLOCK_LEN]> = OnceLock::new();
    INV.get_or_init(|| {
        let mut inv = [0usize; BLOCK_LEN];
        for (pos, &nat) in ZIGZAG.iter().enumerate() {
            inv[nat] = pos;
        }
        inv
    })[natural]
}

/// One 8x8 block of level-shifted spatial samples, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialBlock {
    pub samples: [f64; BLOCK_LEN],
}

impl SpatialBlock {
    pub fn zero() -> Self {
        Self {
            samples: [0.0; BLOCK_LEN],
        }
    }

    pub fn constant(v: f64) -> Self {
        Self {
            samples: [v; BLOCK_LEN],
        }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.samples[row * BLOCK_DIM + col]
    }

    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        &mut self.samples[row * BLOCK_DIM + col]
    }
}

/// One 8x8 block of DCT coefficients; index (0,0) is DC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffBlock {
    pub coeffs: [f64; BLOCK_LEN],
}

impl CoeffBlock {
    pub fn zero() -> Self {
        Self {
            coeffs: [0.0; BLOCK_LEN],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i * BLOCK_DIM + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.coeffs[i * BLOCK_DIM + j]
    }
}

/// Row-major grid of blocks covering a plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid<B> {
    pub blocks: Vec<B>,
    pub block_cols: usize,
    pub block_rows: usize,
    pub orig_width: usize,
    pub orig_height: usize,
}

impl<B> BlockGrid<B> {
    pub fn map<T>(&self, f: impl Fn(&B) -> T) -> BlockGrid<T> {
        BlockGrid {
            blocks: self.blocks.iter().map(f).collect(),
            block_cols: self.block_cols,
            block_rows: self.block_rows,
            orig_width: self.orig_width,
            orig_height: self.orig_height,
        }
    }

    pub fn block(&self, row: usize, col: usize) -> &B {
        &self.blocks[row * self.block_cols + col]
    }
}

/// Splits a plane into level-shifted 8x8 blocks (sample - 128), replicating
/// the last row/column into the padding of edge blocks.
pub fn partition(plane: &[u8], width: usize, height: usize) -> BlockGrid<SpatialBlock> {
    assert!(width >= 1 && height >= 1, "plane must be non-empty");
    assert_eq!(plane.len(), width * height, "plane size mismatch");
    let block_cols = width.div_ceil(BLOCK_DIM);
    let block_rows = height.div_ceil(BLOCK_DIM);
    let mut blocks = Vec::with_capacity(block_cols * block_rows);
    for br in 0..block_rows {
        for bc in 0..block_cols {
            let mut blk = SpatialBlock::zero();
            for r in 0..BLOCK_DIM {
                let y = (br * BLOCK_DIM + r).min(height - 1);
                for c in 0..BLOCK_DIM {
                    let x = (bc * BLOCK_DIM + c).min(width - 1);
                    blk.samples[r * BLOCK_DIM + c] = plane[y * width + x] as f64 - 128.0;
                }
            }
            blocks.push(blk);
        }
    }
    BlockGrid {
        blocks,
        block_cols,
        block_rows,
        orig_width: width,
        orig_height: height,
    }
}

/// Reverses [`partition`]: un-shifts, rounds half away from zero, clamps to
/// [0,255], and crops the padding back off.
pub fn reassemble(grid: &BlockGrid<SpatialBlock>) -> Vec<u8> {
    let (w, h) = (grid.orig_width, grid.orig_height);
    let mut plane = vec![0u8; w * h];
    for br in 0..grid.block_rows {
        for bc in 0..grid.block_cols {
            let blk = grid.block(br, bc);
            for r in 0..BLOCK_DIM {
                let y = br * BLOCK_DIM + r;
                if y >= h {
                    break;
                }
                for c in 0..BLOCK_DIM {
                    let x = bc * BLOCK_DIM + c;
                    if x >= w {
                        break;
                    }
                    let v = (blk.at(r, c) + 128.0).round().clamp(0.0, 255.0);
                    plane[y * w + x] = v as u8;
                }
            }
        }
    }
    plane
}

/// Basis matrix M[u][x] = 1/2 * alpha(u) * cos((2x+1) u pi / 16), so the
/// 2D transform is C = M S M^T and M is orthonormal.
fn basis() -> &'static [[f64; BLOCK_DIM]; BLOCK_DIM] {
    static M: OnceLock<[[f64; BLOCK_DIM]; BLOCK_DIM]> = OnceLock::new();
    M.get_or_init(|| {
        let mut m = [[0.0; BLOCK_DIM]; BLOCK_DIM];
        for (u, row) in m.iter_mut().enumerate() {
            let alpha = if u == 0 {
                std::f64::consts::FRAC_1_SQRT_2
            } else {
                1.0
            };
            for (x, v) in row.iter_mut().enumerate() {
                *v = 0.5
                    * alpha
                    * ((2.0 * x as f64 + 1.0) * u as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        m
    })
}

/// Forward orthonormal-scaled JPEG 2D DCT-II. DC equals 8x the block mean.
pub fn forward_dct(block: &SpatialBlock) -> CoeffBlock {
    let m = basis();
    // rows: tmp[u][c] = sum_r M[u][r] * s[r][c]
    let mut tmp = [[0.0f64; BLOCK_DIM]; BLOCK_DIM];
    for u in 0..BLOCK_DIM {
        for c in 0..BLOCK_DIM {
            let mut acc = 0.0;
            for r in 0..BLOCK_DIM {
                acc += m[u][r] * block.samples[r * BLOCK_DIM + c];
            }
            tmp[u][c] = acc;
        }
    }
    // cols: C[u][v] = sum_c tmp[u][c] * M[v][c]
    let mut out = CoeffBlock::zero();
    for u in 0..BLOCK_DIM {
        for v in 0..BLOCK_DIM {
            let mut acc = 0.0;
            for c in 0..BLOCK_DIM {
                acc += tmp[u][c] * m[v][c];
            }
            out.coeffs[u * BLOCK_DIM + v] = acc;
        }
    }
    out
}

/// Inverse of [`forward_dct`] (S = M^T C M), exact to float rounding.
pub fn inverse_dct(block: &CoeffBlock) -> SpatialBlock {
    let m = basis();
    // tmp[r][v] = sum_u M[u][r] * C[u][v]
    let mut tmp = [[0.0f64; BLOCK_DIM]; BLOCK_DIM];
    for r in 0..BLOCK_DIM {
        for v in 0..BLOCK_DIM {
            let mut acc = 0.0;
            for u in 0..BLOCK_DIM {
                acc += m[u][r] * block.coeffs[u * BLOCK_DIM + v];
            }
            tmp[r][v] = acc;
        }
    }
    // s[r][c] = sum_v tmp[r][v] * M[v][c]
    let mut out = SpatialBlock::zero();
    for r in 0..BLOCK_DIM {
        for c in 0..BLOCK_DIM {
            let mut acc = 0.0;
            for v in 0..BLOCK_DIM {
                acc += tmp[r][v] * m[v][c];
            }
            out.samples[r * BLOCK_DIM + c] = acc;
        }
    }
    out
}

/// Reorders coefficients into the zig-zag sequence; element 0 is DC.
pub fn zigzag(block: &CoeffBlock) -> [f64; BLOCK_LEN] {
    let mut out = [0.0; BLOCK_LEN];
    for (pos, &nat) in ZIGZAG.iter().enumerate() {
        out[pos] = block.coeffs[nat];
    }
    out
}

/// Inverse of [`zigzag`].
pub fn unzigzag(v: &[f64; BLOCK_LEN]) -> CoeffBlock {
    let mut out = CoeffBlock::zero();
    for (pos, &nat) in ZIGZAG.iter().enumerate() {
        out.coeffs[nat] = v[pos];
    }
    out
}
