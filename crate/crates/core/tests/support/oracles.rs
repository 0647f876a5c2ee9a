//! Brute-force reference implementations used only by tests.
#![allow(dead_code)]

/// Crete blur estimate written directly from its definition on a 2-D grid,
/// with clamped reads. Returns sharpness = 1 - blur.
pub fn crete_sharpness(pixels: &[Vec<f64>]) -> f64 {
    let h = pixels.len() as isize;
    let w = pixels[0].len() as isize;
    let at = |y: isize, x: isize| pixels[y.clamp(0, h - 1) as usize][x.clamp(0, w - 1) as usize];
    let mut blurs = Vec::new();
    for (dy, dx) in [(1isize, 0isize), (0, 1)] {
        let smooth = |y: isize, x: isize| -> f64 {
            (-4..=4).map(|t| at(y + t * dy, x + t * dx)).sum::<f64>() / 9.0
        };
        let (mut s_f, mut s_v) = (0.0, 0.0);
        for y in dy..h {
            for x in dx..w {
                let d_f = (at(y, x) - at(y - dy, x - dx)).abs();
                let d_b = (smooth(y, x) - smooth(y - dy, x - dx)).abs();
                s_f += d_f;
                s_v += (d_f - d_b).max(0.0);
            }
        }
        if s_f > 0.0 {
            blurs.push((s_f - s_v) / s_f);
        }
    }
    match blurs.iter().cloned().reduce(f64::max) {
        Some(b) => (1.0 - b).clamp(0.0, 1.0),
        None => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefLabel {
    Cluster(usize),
    Noise,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// DBSCAN by definition: clusters are connected components of core points
/// under the eps relation, numbered by their lowest-index core point. A border
/// point joins the lowest-numbered cluster with a core point within eps.
pub fn dbscan_reference(points: &[Vec<f64>], eps: f64, min_points: usize) -> Vec<RefLabel> {
    let n = points.len();
    let dist = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    let near = |i: usize, j: usize| dist(&points[i], &points[j]) <= eps;
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_points)
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if core[i] && core[j] && near(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut number = vec![None; n];
    let mut next = 0;
    for i in 0..n {
        if core[i] {
            let root = find(&mut parent, i);
            if number[root].is_none() {
                number[root] = Some(next);
                next += 1;
            }
        }
    }
    (0..n)
        .map(|i| {
            if core[i] {
                let root = find(&mut parent, i);
                return RefLabel::Cluster(number[root].unwrap());
            }
            (0..n)
                .filter(|&j| core[j] && near(i, j))
                .map(|j| {
                    let root = find(&mut parent, j);
                    number[root].unwrap()
                })
                .min()
                .map_or(RefLabel::Noise, RefLabel::Cluster)
        })
        .collect()
}
