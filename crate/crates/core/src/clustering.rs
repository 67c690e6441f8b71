//! K-means over centrality time-series under cosine distance.
//!
//! Cosine distance 1 - A·B / (\u{2016}A\u{2016}\u{2016}B\u{2016}) depends only on direction, so
//! rows are direction-normalized up front; the centroid update (arithmetic
//! mean of member rows, renormalized to unit norm) is then the exact
//! minimizer of the within-cluster objective and the objective never
//! increases across iterations — asserted in the loop. Seeding is greedy
//! k-means++ under the same distance with a seeded portable RNG, so a fixed
//! seed reproduces bit-identical assignments.

use rand_chacha::rand_core::RngCore;

use crate::activity::CentralityMatrix;
use crate::error::{Error, Result};
use crate::identity::IdentityTable;
use crate::sampling;

/// Cosine distance in [0, 2]; errors on a zero-norm vector.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!(
            "clustering: vector lengths differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Argument("clustering: zero-norm vector".into()));
    }
    Ok((1.0 - dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 2.0))
}

fn unit_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Argument("clustering: zero-norm row".into()));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Distance between unit vectors; plain arithmetic, no re-normalization.
fn unit_cos_dist(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (1.0 - dot).clamp(0.0, 2.0)
}

#[derive(Clone, Debug)]
pub struct ClusterAssignment {
    pub k: usize,
    /// Cluster id per matrix row.
    pub assignment: Vec<usize>,
    /// Unit-norm centroid per cluster, window-length.
    pub centroids: Vec<Vec<f64>>,
    pub seed: u64,
    pub iterations_run: usize,
    /// Objective (sum of cosine distances to own centroid) after each
    /// iteration; non-increasing.
    pub objective_trace: Vec<f64>,
}

/// Greedy k-means++ seeding: the first centroid is a uniform draw; each
/// further pick samples a few candidates proportionally to squared distance
/// and keeps the one minimizing the resulting potential.
fn seed_centroids<R: RngCore>(rows: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = sampling::below(rng, n);
    centroids.push(rows[first].clone());
    let mut min_d: Vec<f64> = rows.iter().map(|r| unit_cos_dist(r, &centroids[0])).collect();

    let n_candidates = 2 + (k as f64).ln().floor().max(0.0) as usize;
    while centroids.len() < k {
        let total: f64 = min_d.iter().map(|d| d * d).sum();
        let mut best: Option<(f64, usize)> = None;
        for _ in 0..n_candidates {
            let idx = if total > 0.0 {
                let mut target = sampling::unit_f64(rng) * total;
                let mut chosen = n - 1;
                for (i, d) in min_d.iter().enumerate() {
                    target -= d * d;
                    if target <= 0.0 {
                        chosen = i;
                        break;
                    }
                }
                chosen
            } else {
                // all rows coincide with some centroid; any pick works
                sampling::below(rng, n)
            };
            let potential: f64 = rows
                .iter()
                .zip(&min_d)
                .map(|(r, &d)| {
                    let nd = unit_cos_dist(r, &rows[idx]);
                    d.min(nd).powi(2)
                })
                .sum();
            if best.is_none_or(|(p, _)| potential < p) {
                best = Some((potential, idx));
            }
        }
        let (_, idx) = best.expect("at least one candidate");
        centroids.push(rows[idx].clone());
        for (r, d) in rows.iter().zip(min_d.iter_mut()) {
            let nd = unit_cos_dist(r, centroids.last().unwrap());
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

/// Cluster the matrix rows into k groups. Deterministic for a fixed
/// (matrix, k, seed); iterates assign/update until assignments stabilize or
/// `max_iter`. Empty clusters are repaired by reassigning the point
/// farthest from its centroid.
pub fn kmeans(
    matrix: &CentralityMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterAssignment> {
    let n = matrix.n_rows();
    if k == 0 {
        return Err(Error::Argument("clustering: k must be >= 1".into()));
    }
    if k > n {
        return Err(Error::Argument(format!(
            "clustering: k = {k} exceeds row count {n}"
        )));
    }
    let rows: Vec<Vec<f64>> = matrix
        .rows()
        .map(unit_normalize)
        .collect::<Result<_>>()?;

    let mut rng = sampling::seeded(seed);
    let mut centroids = seed_centroids(&rows, k, &mut rng);
    let mut assignment = vec![0usize; n];
    let mut objective_trace = Vec::new();
    let mut iterations_run = 0;

    for _ in 0..max_iter {
        // assignment step: nearest centroid, ties to the lowest cluster id
        let mut new_assignment = vec![0usize; n];
        let mut dist_to_own = vec![0.0f64; n];
        for (i, row) in rows.iter().enumerate() {
            let mut best = (f64::INFINITY, 0usize);
            for (c, centroid) in centroids.iter().enumerate() {
                let d = unit_cos_dist(row, centroid);
                if d < best.0 {
                    best = (d, c);
                }
            }
            new_assignment[i] = best.1;
            dist_to_own[i] = best.0;
        }

        // empty-cluster repair: hand each empty cluster the point farthest
        // from its centroid, among clusters that can spare one
        let mut counts = vec![0usize; k];
        for &c in &new_assignment {
            counts[c] += 1;
        }
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let mut candidate: Option<(f64, usize)> = None;
            for (i, &c) in new_assignment.iter().enumerate() {
                if counts[c] < 2 {
                    continue;
                }
                let farther = candidate.is_none_or(|(d, _)| dist_to_own[i] > d);
                if farther {
                    candidate = Some((dist_to_own[i], i));
                }
            }
            let (_, donor) = candidate
                .ok_or_else(|| Error::Internal("clustering: cannot repair empty cluster".into()))?;
            counts[new_assignment[donor]] -= 1;
            counts[empty] += 1;
            new_assignment[donor] = empty;
            dist_to_own[donor] = 0.0; // becomes its own centroid at update
        }

        let converged = iterations_run > 0 && new_assignment == assignment;
        assignment = new_assignment;
        if converged {
            break;
        }

        // update step: mean of member rows, renormalized to unit norm
        let dim = matrix.n_windows;
        let mut sums = vec![vec![0.0f64; dim]; k];
        for (row, &c) in rows.iter().zip(&assignment) {
            for (s, v) in sums[c].iter_mut().zip(row) {
                *s += v;
            }
        }
        for (c, sum) in sums.iter().enumerate() {
            centroids[c] = unit_normalize(sum).map_err(|_| {
                Error::Internal("clustering: centroid collapsed to zero norm".into())
            })?;
        }

        let objective: f64 = rows
            .iter()
            .zip(&assignment)
            .map(|(row, &c)| unit_cos_dist(row, &centroids[c]))
            .sum();
        if let Some(&prev) = objective_trace.last() {
            assert!(
                objective <= prev + 1e-9,
                "objective increased: {prev} -> {objective}"
            );
        }
        objective_trace.push(objective);
        iterations_run += 1;
    }

    Ok(ClusterAssignment {
        k,
        assignment,
        centroids,
        seed,
        iterations_run,
        objective_trace,
    })
}

/// Row permutation for heatmap output: clusters ordered by the window index
/// of their centroid's peak (ascending, ties by cluster id); within a
/// cluster, rows by descending coverage then alias.
pub fn order_rows_for_heatmap(
    assignment: &ClusterAssignment,
    matrix: &CentralityMatrix,
    ids: &IdentityTable,
) -> Vec<usize> {
    let peak = |centroid: &[f64]| -> usize {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (w, &v) in centroid.iter().enumerate() {
            if v > best.0 {
                best = (v, w);
            }
        }
        best.1
    };
    let mut cluster_order: Vec<usize> = (0..assignment.k).collect();
    cluster_order.sort_by_key(|&c| (peak(&assignment.centroids[c]), c));

    let mut out = Vec::with_capacity(matrix.n_rows());
    for &c in &cluster_order {
        let mut members: Vec<usize> = (0..matrix.n_rows())
            .filter(|&r| assignment.assignment[r] == c)
            .collect();
        members.sort_by(|&a, &b| {
            matrix
                .coverage(b)
                .partial_cmp(&matrix.coverage(a))
                .unwrap()
                .then_with(|| ids.alias(matrix.participants[a]).cmp(ids.alias(matrix.participants[b])))
        });
        out.extend(members);
    }
    out
}

/// Pair-counting agreement (Rand index) between two clusterings of the same
/// points: the fraction of point pairs grouped identically. Label-free.
pub fn pair_agreement(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut agree = 0u64;
    let mut total = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}
