//! Betweenness centrality over window graphs.
//!
//! For vertex k, raw betweenness sums g_ij(k) / g_ij over unordered vertex
//! pairs {i, j} in the same component, where g_ij counts minimum-distance
//! paths and g_ij(k) those passing through k. The fast path is a
//! single-source shortest-path accumulation (one traversal per source with
//! dependency back-propagation); [`betweenness_bruteforce`] enumerates
//! simple paths directly and serves as the independent oracle on small
//! graphs. Normalization divides by (n-1)(n-2)/2, the maximum attainable in
//! an n-node graph.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand_chacha::rand_core::RngCore;

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::sampling;
use crate::windows::WindowSpec;

/// How an edge weight translates into geodesic distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMode {
    /// Ignore weights; distance is the hop count.
    Unit,
    /// Edge weight is the distance (minimum-total-weight geodesics); the
    /// default.
    Weight,
    /// Distance is 1/weight, so heavier interaction means closer.
    InverseWeight,
}

impl DistanceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistanceMode::Unit => "unit",
            DistanceMode::Weight => "weight",
            DistanceMode::InverseWeight => "inverse_weight",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unit" => Some(DistanceMode::Unit),
            "weight" => Some(DistanceMode::Weight),
            "inverse_weight" => Some(DistanceMode::InverseWeight),
            _ => None,
        }
    }
}

/// Relative tolerance for distance ties under real-valued distances.
const TIE_EPS: f64 = 1e-12;

fn float_eq(a: f64, b: f64) -> bool {
    // an unreached distance (infinity) never ties with a real one
    a.is_finite() && b.is_finite() && (a - b).abs() <= TIE_EPS * a.abs().max(b.abs()).max(1.0)
}

/// Raw betweenness per node, aligned with `g.nodes()`.
pub fn betweenness(g: &InteractionGraph, mode: DistanceMode) -> Vec<f64> {
    let n = g.node_count();
    let adj = g.local_adjacency();
    let mut raw = vec![0.0f64; n];
    for source in 0..n {
        let (order, sigma, preds) = match mode {
            DistanceMode::Unit => sssp_integer(&adj, source, |_| 1),
            DistanceMode::Weight => sssp_integer(&adj, source, |w| w as u64),
            DistanceMode::InverseWeight => sssp_float(&adj, source),
        };
        let mut delta = vec![0.0f64; n];
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != source {
                raw[w] += delta[w];
            }
        }
    }
    // Each unordered pair was accumulated from both endpoints.
    for x in &mut raw {
        *x *= 0.5;
    }
    raw
}

/// Dijkstra with exact integer distances. Returns the settle order, the
/// geodesic path counts, and the predecessor lists along geodesics.
fn sssp_integer(
    adj: &[Vec<(usize, u32)>],
    source: usize,
    cost: impl Fn(u32) -> u64,
) -> (Vec<usize>, Vec<f64>, Vec<Vec<usize>>) {
    let n = adj.len();
    let mut dist = vec![u64::MAX; n];
    let mut sigma = vec![0.0f64; n];
    let mut preds = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    dist[source] = 0;
    sigma[source] = 1.0;
    heap.push(Reverse((0, source)));

    while let Some(Reverse((d, v))) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        order.push(v);
        for &(w, weight) in &adj[v] {
            if settled[w] {
                continue;
            }
            let nd = d + cost(weight);
            if nd < dist[w] {
                dist[w] = nd;
                sigma[w] = sigma[v];
                preds[w].clear();
                preds[w].push(v);
                heap.push(Reverse((nd, w)));
            } else if nd == dist[w] {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }
    (order, sigma, preds)
}

/// Dijkstra with real distances (1/weight per edge); ties detected with a
/// relative tolerance since path counting is tie-sensitive.
fn sssp_float(adj: &[Vec<(usize, u32)>], source: usize) -> (Vec<usize>, Vec<f64>, Vec<Vec<usize>>) {
    #[derive(PartialEq)]
    struct Entry(f64, usize);
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
        }
    }

    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0f64; n];
    let mut preds = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap: BinaryHeap<Reverse<Entry>> = BinaryHeap::new();
    dist[source] = 0.0;
    sigma[source] = 1.0;
    heap.push(Reverse(Entry(0.0, source)));

    while let Some(Reverse(Entry(d, v))) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        order.push(v);
        for &(w, weight) in &adj[v] {
            if settled[w] {
                continue;
            }
            let nd = d + 1.0 / weight as f64;
            if float_eq(nd, dist[w]) {
                sigma[w] += sigma[v];
                preds[w].push(v);
            } else if nd < dist[w] {
                dist[w] = nd;
                sigma[w] = sigma[v];
                preds[w].clear();
                preds[w].push(v);
                heap.push(Reverse(Entry(nd, w)));
            }
        }
    }
    (order, sigma, preds)
}

/// Eq. of the normalized score: raw / ((n-1)(n-2)/2); 0 when n < 3, where
/// the denominator degenerates.
pub fn normalize(raw_b: f64, n: usize) -> f64 {
    if n < 3 {
        return 0.0;
    }
    let denom = ((n - 1) * (n - 2)) as f64 / 2.0;
    raw_b / denom
}

/// Largest node count the brute-force oracle accepts.
pub const BRUTEFORCE_MAX_NODES: usize = 10;

/// Independent oracle: enumerate all simple paths per pair, keep the
/// minimum-distance ones, and accumulate path shares directly. Rejects
/// graphs above [`BRUTEFORCE_MAX_NODES`] nodes.
pub fn betweenness_bruteforce(g: &InteractionGraph, mode: DistanceMode) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n > BRUTEFORCE_MAX_NODES {
        return Err(Error::Argument(format!(
            "centrality: brute force limited to {BRUTEFORCE_MAX_NODES} nodes, got {n}"
        )));
    }
    let adj = g.local_adjacency();
    let edge_dist = |w: u32| -> f64 {
        match mode {
            DistanceMode::Unit => 1.0,
            DistanceMode::Weight => w as f64,
            DistanceMode::InverseWeight => 1.0 / w as f64,
        }
    };
    let exact = mode != DistanceMode::InverseWeight;

    let mut raw = vec![0.0f64; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut best = f64::INFINITY;
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut visited = vec![false; n];
            let mut current = vec![i];
            visited[i] = true;
            collect_min_paths(
                &adj,
                j,
                &mut visited,
                &mut current,
                0.0,
                &edge_dist,
                exact,
                &mut best,
                &mut paths,
            );
            if paths.is_empty() {
                continue; // disconnected pair contributes nothing
            }
            let share = 1.0 / paths.len() as f64;
            for path in &paths {
                for &k in &path[1..path.len() - 1] {
                    raw[k] += share;
                }
            }
        }
    }
    Ok(raw)
}

#[allow(clippy::too_many_arguments)]
fn collect_min_paths(
    adj: &[Vec<(usize, u32)>],
    target: usize,
    visited: &mut [bool],
    current: &mut Vec<usize>,
    dist: f64,
    edge_dist: &impl Fn(u32) -> f64,
    exact: bool,
    best: &mut f64,
    paths: &mut Vec<Vec<usize>>,
) {
    let v = *current.last().unwrap();
    if v == target {
        let is_tie = if exact {
            dist == *best
        } else {
            float_eq(dist, *best)
        };
        if is_tie {
            paths.push(current.clone());
        } else if dist < *best {
            *best = dist;
            paths.clear();
            paths.push(current.clone());
        }
        return;
    }
    for &(w, weight) in &adj[v] {
        if visited[w] {
            continue;
        }
        let nd = dist + edge_dist(weight);
        // prune: a longer prefix can never reach a minimum-distance path
        let worth = if exact {
            nd <= *best
        } else {
            nd <= *best || float_eq(nd, *best)
        };
        if !worth {
            continue;
        }
        visited[w] = true;
        current.push(w);
        collect_min_paths(adj, target, visited, current, nd, edge_dist, exact, best, paths);
        current.pop();
        visited[w] = false;
    }
}

/// Seeded random graph for oracle trials: up to `max_nodes` nodes, edge
/// probability 1/2, weights 1..=5.
pub fn random_graph<R: RngCore>(rng: &mut R, max_nodes: usize, window: WindowSpec) -> InteractionGraph {
    let n = 2 + sampling::below(rng, max_nodes.saturating_sub(1).max(1));
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if sampling::unit_f64(rng) < 0.5 {
                let w = 1 + sampling::below(rng, 5) as u32;
                edges.push((u, v, w));
            }
        }
    }
    InteractionGraph::from_parts(window, (0..n as u32).collect(), &edges)
        .expect("generated edges are valid")
}

/// Outcome of one oracle equivalence run.
#[derive(Debug)]
pub struct OracleSummary {
    pub trials: usize,
    pub max_nodes: usize,
    pub max_abs_diff: f64,
    pub elapsed_secs: f64,
}

/// Compare fast betweenness against the brute-force oracle on seeded random
/// graphs across all three distance modes. Errors on the first disagreement
/// beyond `tol`.
pub fn oracle_check(trials: usize, max_nodes: usize, seed: u64, tol: f64) -> Result<OracleSummary> {
    if max_nodes > BRUTEFORCE_MAX_NODES {
        return Err(Error::Argument(format!(
            "centrality: oracle check limited to {BRUTEFORCE_MAX_NODES} nodes"
        )));
    }
    let started = Instant::now();
    let window = WindowSpec {
        index: 0,
        start_day: chrono::NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
        length_days: 30,
        slide_days: 1,
    };
    let mut max_abs_diff = 0.0f64;
    for trial in 0..trials {
        let mut rng = sampling::seeded(seed.wrapping_add(trial as u64));
        let g = random_graph(&mut rng, max_nodes, window);
        for mode in [DistanceMode::Unit, DistanceMode::Weight, DistanceMode::InverseWeight] {
            let fast = betweenness(&g, mode);
            let brute = betweenness_bruteforce(&g, mode)?;
            for (k, (a, b)) in fast.iter().zip(&brute).enumerate() {
                let diff = (a - b).abs();
                max_abs_diff = max_abs_diff.max(diff);
                if diff > tol {
                    return Err(Error::Internal(format!(
                        "centrality: oracle mismatch trial {trial} mode {} node {k}: fast {a} vs brute {b}",
                        mode.as_str()
                    )));
                }
            }
        }
    }
    Ok(OracleSummary {
        trials,
        max_nodes,
        max_abs_diff,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> WindowSpec {
        WindowSpec {
            index: 0,
            start_day: "2010-01-01".parse().unwrap(),
            length_days: 30,
            slide_days: 1,
        }
    }

    fn graph(n: u32, edges: &[(u32, u32, u32)]) -> InteractionGraph {
        InteractionGraph::from_parts(window(), (0..n).collect(), edges).unwrap()
    }

    #[test]
    fn path_center_scores_one() {
        let g = graph(3, &[(0, 1, 1), (1, 2, 1)]);
        for mode in [DistanceMode::Unit, DistanceMode::Weight, DistanceMode::InverseWeight] {
            let raw = betweenness(&g, mode);
            assert!((raw[1] - 1.0).abs() < 1e-12, "{mode:?}: {raw:?}");
            assert!(raw[0].abs() < 1e-12 && raw[2].abs() < 1e-12);
        }
    }

    #[test]
    fn star_center_saturates_normalization() {
        let g = graph(5, &[(0, 1, 1), (0, 2, 1), (0, 3, 1), (0, 4, 1)]);
        let raw = betweenness(&g, DistanceMode::Weight);
        assert!((raw[0] - 6.0).abs() < 1e-12);
        assert!((normalize(raw[0], 5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_cycle_splits_pair_shares() {
        let g = graph(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)]);
        for mode in [DistanceMode::Unit, DistanceMode::Weight, DistanceMode::InverseWeight] {
            let raw = betweenness(&g, mode);
            for (k, v) in raw.iter().enumerate() {
                assert!((v - 0.5).abs() < 1e-9, "{mode:?} node {k}: {v}");
            }
        }
        assert!((normalize(0.5, 4) - 0.5 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_degenerate_cases() {
        assert_eq!(normalize(0.0, 7), 0.0);
        assert_eq!(normalize(3.0, 2), 0.0);
        assert_eq!(normalize(3.0, 0), 0.0);
    }

    #[test]
    fn empty_graph_is_empty_map() {
        let g = graph(0, &[]);
        assert!(betweenness(&g, DistanceMode::Weight).is_empty());
    }

    #[test]
    fn disconnected_pairs_contribute_nothing_but_n_counts_all() {
        // path 0-1-2 plus isolated 3, 4: raw unchanged, normalization uses n=5
        let g = graph(5, &[(0, 1, 1), (1, 2, 1)]);
        let raw = betweenness(&g, DistanceMode::Weight);
        assert!((raw[1] - 1.0).abs() < 1e-12);
        assert!((normalize(raw[1], g.node_count()) - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn weight_mode_reroutes_around_heavy_edge() {
        // direct edge 0-2 weighs 5; the detour through 1 weighs 2
        let g = graph(3, &[(0, 2, 5), (0, 1, 1), (1, 2, 1)]);
        let raw = betweenness(&g, DistanceMode::Weight);
        assert!((raw[1] - 1.0).abs() < 1e-12);
        // unit mode takes the direct hop instead
        let raw = betweenness(&g, DistanceMode::Unit);
        assert!(raw[1].abs() < 1e-12);
        // inverse mode favors the heavy direct edge (distance 1/5)
        let raw = betweenness(&g, DistanceMode::InverseWeight);
        assert!(raw[1].abs() < 1e-12);
    }

    #[test]
    fn brute_force_matches_on_fixtures() {
        let fixtures = [
            graph(3, &[(0, 1, 1), (1, 2, 1)]),
            graph(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)]),
            graph(3, &[(0, 2, 5), (0, 1, 1), (1, 2, 1)]),
        ];
        for g in &fixtures {
            for mode in [DistanceMode::Unit, DistanceMode::Weight, DistanceMode::InverseWeight] {
                let fast = betweenness(g, mode);
                let brute = betweenness_bruteforce(g, mode).unwrap();
                for (a, b) in fast.iter().zip(&brute) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn brute_force_guards_node_count() {
        let nodes: Vec<u32> = (0..11).collect();
        let g = InteractionGraph::from_parts(window(), nodes, &[]).unwrap();
        assert!(matches!(
            betweenness_bruteforce(&g, DistanceMode::Unit),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn fast_equals_brute_on_seeded_trials() {
        let summary = oracle_check(50, 8, 99, 1e-9).unwrap();
        assert_eq!(summary.trials, 50);
    }

    #[test]
    fn uniform_weight_scaling_preserves_raw_scores() {
        let mut rng = sampling::seeded(17);
        for _ in 0..20 {
            let g = random_graph(&mut rng, 8, window());
            let scaled_edges: Vec<(u32, u32, u32)> = g
                .edges()
                .iter()
                .map(|(&(u, v), &w)| (u, v, w * 3))
                .collect();
            let scaled =
                InteractionGraph::from_parts(window(), g.nodes().to_vec(), &scaled_edges).unwrap();
            for mode in [DistanceMode::Weight, DistanceMode::InverseWeight] {
                let a = betweenness(&g, mode);
                let b = betweenness(&scaled, mode);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn tree_pair_share_identity() {
        // On a tree geodesics are unique, so summed raw betweenness equals
        // the summed interior-vertex counts: for each pair, hops - 1.
        let g = graph(6, &[(0, 1, 2), (1, 2, 1), (1, 3, 4), (3, 4, 1), (3, 5, 3)]);
        let raw = betweenness(&g, DistanceMode::Weight);
        let total: f64 = raw.iter().sum();

        // hop counts via unit-mode distances on the same tree
        let adj = g.local_adjacency();
        let n = g.node_count();
        let mut expected = 0.0;
        for i in 0..n {
            let (order, _, preds) = super::sssp_integer(&adj, i, |_| 1);
            let mut hops = vec![0u64; n];
            for &v in &order {
                if let Some(&p) = preds[v].first() {
                    hops[v] = hops[p] + 1;
                }
            }
            for (j, &h) in hops.iter().enumerate() {
                if j != i && h > 0 {
                    expected += (h - 1) as f64;
                }
            }
        }
        expected /= 2.0; // each unordered pair counted twice
        assert!((total - expected).abs() < 1e-9);
    }
}
