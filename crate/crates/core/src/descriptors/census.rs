//! Census transform and the CENTRIST spatial-pyramid histogram.

use image::GrayImage;

use crate::error::{Error, Result};

pub const CENSUS_BINS: usize = 256;

// Top-left to bottom-right; the first neighbor is the most significant bit.
const NEIGHBORS: [(i32, i32); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Census transform of every interior pixel.
///
/// A neighbor contributes bit 0 when the center is strictly less than it and
/// bit 1 otherwise, so ties give 1. The result is `(w-2) x (h-2)`; output
/// pixel `(x, y)` belongs to input pixel `(x+1, y+1)`.
pub fn census_transform(pixels: &GrayImage) -> Result<GrayImage> {
    let (w, h) = pixels.dimensions();
    if w < 3 || h < 3 {
        return Err(Error::DegenerateInput(format!(
            "census transform needs at least 3x3 pixels, got {w}x{h}"
        )));
    }
    let (w, h) = (w as usize, h as usize);
    let raw = pixels.as_raw();
    let inner = w - 2;
    let mut out = vec![0u8; inner * (h - 2)];
    for (cy, codes) in (1..h - 1).zip(out.chunks_exact_mut(inner)) {
        let center = &raw[cy * w + 1..cy * w + 1 + inner];
        for &(dx, dy) in &NEIGHBORS {
            let start = ((cy as i32 + dy) as usize) * w + (1 + dx) as usize;
            let neighbor = &raw[start..start + inner];
            for ((code, &c), &n) in codes.iter_mut().zip(center).zip(neighbor) {
                *code = (*code << 1) | u8::from(c >= n);
            }
        }
    }
    Ok(GrayImage::from_raw(inner as u32, (h - 2) as u32, out).expect("buffer matches dimensions"))
}

/// Half-open pixel bounds of block `index` when `extent` is cut into `count` parts.
pub(crate) fn block_bounds(extent: u32, count: u32, index: u32) -> (u32, u32) {
    let lo = (index as u64 * extent as u64 / count as u64) as u32;
    let hi = ((index as u64 + 1) * extent as u64 / count as u64) as u32;
    (lo, hi)
}

/// Number of blocks in a pyramid of `levels` levels (1 + 4 + 16 + ...).
pub fn pyramid_blocks(levels: u32) -> usize {
    (0..levels).map(|l| 1usize << (2 * l)).sum()
}

/// CENTRIST: per-block census histograms over a spatial pyramid.
///
/// Level `L` splits the image into `2^L x 2^L` non-overlapping blocks. Each
/// block contributes a 256-bin histogram of the census values of its interior
/// pixels, L1-normalized. Blocks are concatenated level by level, row-major.
pub fn centrist(pixels: &GrayImage, levels: u32) -> Result<Vec<f64>> {
    if levels == 0 {
        return Err(Error::Config("centrist needs at least one pyramid level".into()));
    }
    let (w, h) = pixels.dimensions();
    let finest = 1u32 << (levels - 1);
    if w / finest < 3 || h / finest < 3 {
        return Err(Error::Config(format!(
            "{levels} pyramid levels leave blocks smaller than 3x3 on a {w}x{h} image"
        )));
    }
    let census = census_transform(pixels)?;
    let census_w = census.width() as usize;
    let codes = census.as_raw();

    let mut out = Vec::with_capacity(pyramid_blocks(levels) * CENSUS_BINS);
    for level in 0..levels {
        let per_side = 1u32 << level;
        for by in 0..per_side {
            let (y0, y1) = block_bounds(h, per_side, by);
            for bx in 0..per_side {
                let (x0, x1) = block_bounds(w, per_side, bx);
                let mut hist = [0.0f64; CENSUS_BINS];
                let mut count = 0usize;
                // Only interior image pixels carry a census value.
                let (xa, xb) = (x0.max(1) as usize - 1, x1.min(w - 1) as usize - 1);
                for y in y0.max(1)..y1.min(h - 1) {
                    let row = (y as usize - 1) * census_w;
                    for &code in &codes[row + xa..row + xb.max(xa)] {
                        hist[code as usize] += 1.0;
                    }
                    count += xb.saturating_sub(xa);
                }
                if count > 0 {
                    hist.iter_mut().for_each(|v| *v /= count as f64);
                }
                out.extend_from_slice(&hist);
            }
        }
    }
    Ok(out)
}
