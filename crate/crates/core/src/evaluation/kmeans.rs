use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::events::EventTable;
use crate::{AemError, Result};

pub const KMEANS_RESTARTS: usize = 10;
const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
}

fn squared_distance(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_seeds<R: Rng>(data: &ArrayView2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = data.nrows();
    let mut centroids = Array2::zeros((k, data.ncols()));
    centroids.row_mut(0).assign(&data.row(rng.random_range(0..n)));
    let mut closest: Vec<f64> = data.rows().into_iter().map(|r| squared_distance(&r, &centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in closest.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&data.row(pick));
        for (i, row) in data.rows().into_iter().enumerate() {
            closest[i] = closest[i].min(squared_distance(&row, &centroids.row(c)));
        }
    }
    centroids
}

fn assign(data: &ArrayView2<f64>, centroids: &Array2<f64>, labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, row) in data.rows().into_iter().enumerate() {
        let (best, dist) = centroids
            .rows()
            .into_iter()
            .map(|c| squared_distance(&row, &c))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (j, d)| if d < acc.1 { (j, d) } else { acc });
        labels[i] = best;
        inertia += dist;
    }
    inertia
}

fn lloyd<R: Rng>(data: &ArrayView2<f64>, k: usize, rng: &mut R) -> KMeansResult {
    let mut centroids = plus_plus_seeds(data, k, rng);
    let mut labels = vec![usize::MAX; data.nrows()];
    let mut history = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let previous = labels.clone();
        history.push(assign(data, &centroids, &mut labels));
        if labels == previous {
            break;
        }
        let mut sums = Array2::<f64>::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; k];
        for (row, &l) in data.rows().into_iter().zip(&labels) {
            let mut s = sums.row_mut(l);
            s += &row;
            counts[l] += 1;
        }
        for (j, &count) in counts.iter().enumerate() {
            // an empty cluster keeps its previous centroid
            if count > 0 {
                centroids.row_mut(j).assign(&(&sums.row(j) / count as f64));
            }
        }
    }
    KMeansResult {
        inertia: *history.last().unwrap(),
        assignments: labels,
        centroids,
        inertia_history: history,
    }
}

/// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
/// inertia wins. Restart seeds are drawn from one generator seeded by `seed`.
pub fn kmeans(data: &ArrayView2<f64>, k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    if k == 0 || k > data.nrows() {
        return Err(AemError::config(format!(
            "k must lie in 1..={} for {} documents, got {k}",
            data.nrows(),
            data.nrows()
        )));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let run = lloyd(data, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

/// Centroids as an event table: each field block renormalized to sum to one
/// (all-zero blocks stay zero), support = cluster size.
pub fn kmeans_events(result: &KMeansResult, field_sizes: [usize; 4]) -> EventTable {
    let mut table = EventTable::from_rows(&result.centroids.view(), field_sizes);
    for event in &mut table.events {
        for block in &mut event.blocks {
            let sum: f64 = block.iter().sum();
            if sum > 0.0 {
                block.iter_mut().for_each(|x| *x /= sum);
            }
        }
        event.support = result.assignments.iter().filter(|&&a| a == event.index).count();
    }
    table
}
