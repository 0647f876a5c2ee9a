mod support;

use egoauth_core::timeline::{dbscan, FrameLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::oracles::{dbscan_reference, RefLabel};

fn convert(label: FrameLabel) -> RefLabel {
    match label {
        FrameLabel::Cluster(c) => RefLabel::Cluster(c),
        FrameLabel::Noise => RefLabel::Noise,
    }
}

/// Blobs of varying spread plus uniform background.
fn blobs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let centers: Vec<(f64, f64)> = (0..4)
        .map(|_| (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)))
        .collect();
    (0..n)
        .map(|i| {
            if i % 5 == 4 {
                vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]
            } else {
                let (cx, cy) = centers[i % 4];
                let s = 0.3 + 0.2 * (i % 4) as f64;
                vec![cx + rng.random_range(-s..s), cy + rng.random_range(-s..s)]
            }
        })
        .collect()
}

#[test]
fn agrees_with_reference() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = blobs(&mut rng, 200);
        for (eps, min_points) in [(0.3, 3), (0.6, 5), (1.0, 10)] {
            let got: Vec<RefLabel> = dbscan(&points, eps, min_points).into_iter().map(convert).collect();
            let want = dbscan_reference(&points, eps, min_points);
            assert_eq!(got, want, "seed {seed} eps {eps} min {min_points}");
        }
    }
}

#[test]
fn integer_grid_ties_at_eps() {
    // Distances land exactly on eps, so the inclusive comparison matters.
    let points: Vec<Vec<f64>> = (0..10).flat_map(|x| (0..3).map(move |y| vec![x as f64, y as f64 * 3.0])).collect();
    let got: Vec<RefLabel> = dbscan(&points, 1.0, 3).into_iter().map(convert).collect();
    assert_eq!(got, dbscan_reference(&points, 1.0, 3));
    assert!(got.iter().all(|l| matches!(l, RefLabel::Cluster(_))));
}
