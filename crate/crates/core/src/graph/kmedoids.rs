use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Medoids {
    /// Medoid node indices, ascending.
    pub medoids: Vec<usize>,
    /// Index into `medoids` of the medoid each point is assigned to.
    pub assignment: Vec<usize>,
    /// Total Euclidean distance from every point to its nearest medoid.
    pub cost: f64,
    pub swaps: usize,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Sum over points of the distance to the nearest medoid.
pub fn medoid_cost(points: &[[f64; 2]], medoids: &[usize]) -> f64 {
    points
        .iter()
        .map(|&p| {
            medoids
                .iter()
                .map(|&m| dist(p, points[m]))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Partitioning Around Medoids with Euclidean distance.
///
/// Starts from `k` distinct points drawn with `seed`, then applies the best
/// cost-reducing (medoid, non-medoid) swap until none improves.
pub fn k_medoids(points: &[[f64; 2]], k: usize, seed: u64) -> Result<Medoids> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k must lie in 1..={n}, got {k}"
        )));
    }
    let d: Vec<Vec<f64>> = points
        .iter()
        .map(|&p| points.iter().map(|&q| dist(p, q)).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut medoids = sample(&mut rng, n, k).into_vec();
    let mut is_medoid = vec![false; n];
    medoids.iter().for_each(|&m| is_medoid[m] = true);

    let cost_of = |meds: &[usize]| -> f64 {
        (0..n)
            .map(|p| meds.iter().map(|&m| d[p][m]).fold(f64::INFINITY, f64::min))
            .sum()
    };
    let mut cost = cost_of(&medoids);
    let mut swaps = 0;
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for slot in 0..k {
            for cand in (0..n).filter(|&c| !is_medoid[c]) {
                let old = medoids[slot];
                medoids[slot] = cand;
                let c = cost_of(&medoids);
                medoids[slot] = old;
                if c < best.map_or(cost, |b| b.2) - 1e-12 {
                    best = Some((slot, cand, c));
                }
            }
        }
        match best {
            Some((slot, cand, c)) => {
                is_medoid[medoids[slot]] = false;
                is_medoid[cand] = true;
                medoids[slot] = cand;
                cost = c;
                swaps += 1;
            }
            None => break,
        }
    }
    medoids.sort_unstable();
    let assignment = (0..n)
        .map(|p| {
            (0..k)
                .min_by(|&a, &b| d[p][medoids[a]].total_cmp(&d[p][medoids[b]]))
                .unwrap_or(0)
        })
        .collect();
    Ok(Medoids {
        medoids,
        assignment,
        cost,
        swaps,
    })
}
