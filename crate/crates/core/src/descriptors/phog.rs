//! Pyramid histogram of oriented gradients over Canny edge pixels.

use image::GrayImage;

use super::census::{block_bounds, pyramid_blocks};
use crate::error::{Error, Result};

/// Hysteresis thresholds relative to the strongest gradient in the image.
const CANNY_HIGH_FRACTION: f64 = 0.2;
const CANNY_LOW_FRACTION: f64 = 0.5;

/// Sobel response of one image. Border pixels have zero gradient.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub width: usize,
    pub height: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub magnitude: Vec<f64>,
}

pub fn sobel(pixels: &GrayImage) -> Gradient {
    let (w, h) = (pixels.width() as usize, pixels.height() as usize);
    let raw = pixels.as_raw();
    let mut dx = vec![0.0; w * h];
    let mut dy = vec![0.0; w * h];
    let mut magnitude = vec![0.0; w * h];
    if w < 3 || h < 3 {
        return Gradient { width: w, height: h, dx, dy, magnitude };
    }
    for y in 1..h - 1 {
        let row = |r: usize| &raw[r * w..(r + 1) * w];
        let (up, mid, down) = (row(y - 1), row(y), row(y + 1));
        let out = y * w + 1..(y + 1) * w - 1;
        let (gx_row, gy_row, m_row) = (&mut dx[out.clone()], &mut dy[out.clone()], &mut magnitude[out]);
        let n = w - 2;
        let at = |r: &[u8], o: usize| -> Vec<i32> { r[o..o + n].iter().map(|&v| v as i32).collect() };
        let (ul, uc, ur) = (at(up, 0), at(up, 1), at(up, 2));
        let (ml, mr) = (at(mid, 0), at(mid, 2));
        let (dl, dc, dr) = (at(down, 0), at(down, 1), at(down, 2));
        let (gx_row, gy_row, m_row) = (&mut gx_row[..n], &mut gy_row[..n], &mut m_row[..n]);
        for x in 0..n {
            let gx = (ur[x] + 2 * mr[x] + dr[x]) - (ul[x] + 2 * ml[x] + dl[x]);
            let gy = (dl[x] + 2 * dc[x] + dr[x]) - (ul[x] + 2 * uc[x] + ur[x]);
            gx_row[x] = gx as f64;
            gy_row[x] = gy as f64;
            // Exact integer sum of squares, so this is the correctly rounded norm.
            m_row[x] = ((gx * gx + gy * gy) as f64).sqrt();
        }
    }
    Gradient {
        width: w,
        height: h,
        dx,
        dy,
        magnitude,
    }
}

/// Quantizes a gradient direction, taken modulo 180 degrees, to one of the
/// four neighbor axes: 0 for 0 degrees, 1 for 45, 2 for 90, 3 for 135.
fn nms_axis(dx: f64, dy: f64) -> usize {
    // Fold into the upper half plane, where v = |dy| and u is dx with the
    // fold's sign; tan(22.5) and tan(67.5) split the sectors. Built from
    // comparison bits rather than branches: grain makes the axis random.
    let flip = dy < 0.0 || (dy == 0.0 && dx < 0.0);
    let (v, au) = (dy.abs(), dx.abs());
    let past_first = v >= (std::f64::consts::SQRT_2 - 1.0) * au;
    let past_second = v >= (std::f64::consts::SQRT_2 + 1.0) * au;
    let rising = (dx > 0.0) != flip;
    const AXIS: [usize; 8] = [0, 3, 0, 2, 0, 1, 0, 2];
    AXIS[past_first as usize | (past_second as usize) << 1 | (rising as usize) << 2]
}

/// Canny edge map (non-maximum suppression plus hysteresis) on a Sobel gradient.
///
/// The high threshold is 0.2 of the maximum magnitude and the low threshold
/// half of that. An image without gradient has no edges.
pub fn canny(grad: &Gradient) -> Vec<bool> {
    let (w, h) = (grad.width, grad.height);
    let mut edges = vec![false; w * h];
    let max = grad.magnitude.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return edges;
    }
    let high = CANNY_HIGH_FRACTION * max;
    let low = CANNY_LOW_FRACTION * high;

    let mut thin = vec![0.0; w * h];
    // Neighbor index offsets for the axes 0, 45, 90 and 135 degrees.
    let steps = [1, w + 1, w, w - 1];
    let mag = &grad.magnitude;
    for y in 1..h.saturating_sub(1) {
        for i in y * w + 1..(y + 1) * w - 1 {
            let m = mag[i];
            let step = steps[nms_axis(grad.dx[i], grad.dy[i])];
            let (ahead, behind) = (mag[i + step], mag[i - step]);
            // Asymmetric comparison keeps exactly one pixel of a two-pixel plateau.
            let keep = (m >= low) & (m > behind) & (m >= ahead);
            thin[i] = if keep { m } else { 0.0 };
        }
    }

    // Suppression only marks interior pixels, so every neighbor of a marked
    // pixel is inside the image.
    let neighbors = [w + 1, w, w - 1, 1];
    let mut stack: Vec<usize> = Vec::new();
    for (i, &m) in thin.iter().enumerate() {
        if m >= high {
            edges[i] = true;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        for &d in &neighbors {
            for j in [i - d, i + d] {
                if !edges[j] && thin[j] >= low {
                    edges[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    edges
}

/// Edge orientation in `[0, range)` degrees.
///
/// With a 180 degree range the orientation is `atan(dy/dx) + 90`, so a
/// vertical step edge (purely horizontal gradient) lands at 90 degrees. With
/// 360 degrees it is `atan2(dy, dx) + 180`.
pub fn orientation(dx: f64, dy: f64, angle_range: u32) -> f64 {
    let signed = dy.atan2(dx).to_degrees();
    if angle_range == 180 {
        (signed + 90.0).rem_euclid(180.0)
    } else {
        (signed + 180.0).rem_euclid(360.0)
    }
}

/// Maps a gradient to its orientation bin.
///
/// For the 180 degree range the bin follows from the slope `dy/dx` alone,
/// compared against the tangents of the bin edges; this equals binning
/// [`orientation`] and skips the arctangent.
struct OrientationBins {
    bins: usize,
    angle_range: u32,
    /// tan(edge - 90) for the inner bin edges, ascending.
    slope_edges: Vec<f64>,
}

impl OrientationBins {
    fn new(bins: usize, angle_range: u32) -> Self {
        let width = angle_range as f64 / bins as f64;
        let slope_edges = if angle_range == 180 {
            (1..bins)
                .map(|k| {
                    let t = (k as f64 * width - 90.0).to_radians().tan();
                    // Edges on multiples of 45 degrees have slopes 0 or +-1 exactly;
                    // every other edge slope is irrational, so no integer gradient ties it.
                    if (t - t.round()).abs() < 1e-9 { t.round() } else { t }
                })
                .collect()
        } else {
            Vec::new()
        };
        OrientationBins { bins, angle_range, slope_edges }
    }

    fn bin(&self, dx: f64, dy: f64) -> usize {
        if self.angle_range == 180 {
            let slope = dy / dx;
            let below = self.slope_edges.iter().filter(|&&e| e <= slope).count();
            // Vertical gradient: orientation 0 (or 180, which wraps to 0).
            return if dx == 0.0 { 0 } else { below };
        }
        let width = self.angle_range as f64 / self.bins as f64;
        ((orientation(dx, dy, self.angle_range) / width) as usize).min(self.bins - 1)
    }
}

/// PHOG descriptor: magnitude-weighted edge-orientation histograms over a
/// spatial pyramid, concatenated and L1-normalized as a whole.
pub fn phog(pixels: &GrayImage, levels: u32, bins: usize, angle_range: u32) -> Result<Vec<f64>> {
    if levels == 0 || bins == 0 {
        return Err(Error::Config("phog needs positive levels and bins".into()));
    }
    if angle_range != 180 && angle_range != 360 {
        return Err(Error::Config(format!(
            "phog angle range must be 180 or 360, got {angle_range}"
        )));
    }
    let grad = sobel(pixels);
    let edges = canny(&grad);
    let (w, h) = pixels.dimensions();

    // Per-pixel bin, computed once and reused by every level.
    let binner = OrientationBins::new(bins, angle_range);
    // Branch-free compaction: edge maps of textured frames are close to random.
    let mut edge_index = vec![0; edges.len()];
    let mut n_edges = 0;
    for (i, &e) in edges.iter().enumerate() {
        edge_index[n_edges] = i;
        n_edges += e as usize;
    }
    let edge_pixels: Vec<(usize, usize)> = edge_index[..n_edges]
        .iter()
        .map(|&i| (i, binner.bin(grad.dx[i], grad.dy[i])))
        .collect();

    let mut out = vec![0.0; pyramid_blocks(levels) * bins];
    let mut offset = 0;
    for level in 0..levels {
        let per_side = 1u32 << level;
        // Block column and row of every pixel coordinate at this level.
        let block_of = |extent: u32| -> Vec<usize> {
            let mut map = vec![0; extent as usize];
            for b in 0..per_side {
                let (lo, hi) = block_bounds(extent, per_side, b);
                map[lo as usize..hi as usize].fill(b as usize);
            }
            map
        };
        let (col, row) = (block_of(w), block_of(h));
        for &(i, bin) in &edge_pixels {
            let block = row[i / w as usize] * per_side as usize + col[i % w as usize];
            out[offset + block * bins + bin] += grad.magnitude[i];
        }
        offset += (per_side * per_side) as usize * bins;
    }
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|v| *v /= total);
    }
    Ok(out)
}
