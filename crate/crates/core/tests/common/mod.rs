#![allow(dead_code)]

use std::collections::BTreeMap;

use fairfn::{Graph, GroupAssignment, Partition};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Simple graph from arbitrary `(u, v, w)` triples: loops dropped, repeated
/// pairs keep the first weight. `None` when nothing is left.
pub fn graph_from_triples(n: usize, triples: &[(usize, usize, u8)], weighted: bool) -> Option<Graph> {
    let mut kept = BTreeMap::new();
    for &(u, v, w) in triples {
        if u != v {
            let w = if weighted { f64::from(w) } else { 1.0 };
            kept.entry((u.min(v), u.max(v))).or_insert(w);
        }
    }
    if kept.is_empty() {
        return None;
    }
    Some(Graph::from_edges(n, kept.into_iter().map(|((u, v), w)| (u, v, w))).unwrap())
}

/// G(n, p) with at least one edge; weights in 1..=9 when `weighted`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, weighted: bool) -> Graph {
    loop {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    let w = if weighted { rng.random_range(1..=9) as f64 } else { 1.0 };
                    edges.push((u, v, w));
                }
            }
        }
        if !edges.is_empty() {
            return Graph::from_edges(n, edges).unwrap();
        }
    }
}

/// Random labels with every one of the `r` groups used.
pub fn random_groups(rng: &mut ChaCha8Rng, n: usize, r: usize) -> GroupAssignment {
    assert!(r <= n);
    let mut labels: Vec<usize> = (0..n)
        .map(|i| if i < r { i } else { rng.random_range(0..r) })
        .collect();
    labels.shuffle(rng);
    GroupAssignment::from_dense(labels, r).unwrap()
}

pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, max_k: usize) -> Partition {
    let k = rng.random_range(1..=max_k.max(1));
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    Partition::from_labels(&labels)
}

/// Modularity from the dense adjacency matrix,
/// `Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j) / 2m`. Loop-free graphs only.
pub fn dense_q(g: &Graph, p: &Partition) -> f64 {
    assert!(g.loops().is_empty());
    let n = g.n();
    let mut a = vec![0.0; n * n];
    for &(i, j, w) in g.edges() {
        a[i * n + j] = w;
        a[j * n + i] = w;
    }
    let k: Vec<f64> = (0..n).map(|i| a[i * n..(i + 1) * n].iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let c = p.community_of();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if c[i] == c[j] {
                q += a[i * n + j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Fairness modularity from the explicit protected-group network: vertices
/// in the same group are joined, each vertex carries a unit self-loop, and
/// ordinary modularity is taken over that adjacency.
pub fn dense_qp(ga: &GroupAssignment, p: &Partition) -> f64 {
    let n = ga.n();
    let g = ga.group_of();
    let k: Vec<f64> = (0..n).map(|i| ga.sizes()[g[i]] as f64).collect();
    let two_m: f64 = k.iter().sum();
    let c = p.community_of();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if c[i] == c[j] {
                let a = if g[i] == g[j] { 1.0 } else { 0.0 };
                q += a - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Exact fairness condition: every community holds each group in the
/// global proportion, `c_uw · n == |P_w| · |C_u|`.
pub fn exactly_fair(ga: &GroupAssignment, p: &Partition) -> bool {
    let n = ga.n() as u64;
    let r = ga.r();
    let mut counts = vec![0u64; p.k() * r];
    for (v, &c) in p.community_of().iter().enumerate() {
        counts[c * r + ga.group_of()[v]] += 1;
    }
    let sizes = p.sizes();
    (0..p.k()).all(|u| (0..r).all(|w| counts[u * r + w] * n == ga.sizes()[w] * sizes[u]))
}
