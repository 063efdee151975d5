//! Protected-group assignments, community partitions, and the per-community
//! group counts every fairness quantity is computed from.
//!
//! The protected group network (one complete digraph with self-loops per
//! group) is never materialised. Its degree of vertex `i` is the size of
//! `i`'s group and its edge count is `m^P = Σ_w |P_w|² / 2`, so everything
//! the fairness-modularity needs is a function of [`GroupCountMatrix`].

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};

/// Per-vertex protected-group labels, dense in `0..r`, every group nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    group_of: Vec<usize>,
    sizes: Vec<u64>,
}

impl GroupAssignment {
    /// Wraps labels that are already dense in `0..r`. Group order is kept,
    /// which matters for the Wasserstein ground metric when `r > 2`.
    pub fn from_dense(group_of: Vec<usize>, r: usize) -> Result<Self> {
        if group_of.is_empty() {
            return Err(invalid("group assignment needs at least one vertex"));
        }
        let mut sizes = vec![0u64; r];
        for &g in &group_of {
            if g >= r {
                return Err(invalid(format!("group label {g} outside 0..{r}")));
            }
            sizes[g] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(invalid(format!("protected group {empty} is empty")));
        }
        Ok(GroupAssignment { group_of, sizes })
    }

    pub fn n(&self) -> usize {
        self.group_of.len()
    }

    /// Number of protected groups `r`.
    pub fn r(&self) -> usize {
        self.sizes.len()
    }

    pub fn group_of(&self) -> &[usize] {
        &self.group_of
    }

    /// Group sizes `|P_w|`.
    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    /// `2 m^P = Σ_w |P_w|²`, exact.
    pub fn two_m_p(&self) -> u64 {
        self.sizes.iter().map(|s| s * s).sum()
    }

    /// `m^P`, the edge count of the undirected protected group network.
    pub fn m_p(&self) -> f64 {
        self.two_m_p() as f64 / 2.0
    }

    /// Protected-network degree of every vertex, `|P_{group(i)}|`.
    pub fn k_p(&self) -> Vec<u64> {
        self.group_of.iter().map(|&g| self.sizes[g]).collect()
    }
}

/// Relabels arbitrary integer labels densely in first-appearance order.
pub fn build_groups(labels: &[i64]) -> Result<GroupAssignment> {
    if labels.is_empty() {
        return Err(invalid("group labels are empty"));
    }
    let (dense, r) = relabel(labels.iter().copied());
    GroupAssignment::from_dense(dense, r)
}

fn relabel<T: std::hash::Hash + Eq>(labels: impl IntoIterator<Item = T>) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let dense = labels
        .into_iter()
        .map(|l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

/// Community partition as per-vertex ids, dense in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    community_of: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Relabels arbitrary labels densely in first-appearance order.
    pub fn from_labels<T: std::hash::Hash + Eq + Copy>(labels: &[T]) -> Self {
        let (community_of, k) = relabel(labels.iter().copied());
        Partition { community_of, k }
    }

    /// Builds a partition from disjoint vertex sets covering `0..n`.
    pub fn from_communities(n: usize, communities: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (c, members) in communities.iter().enumerate() {
            for &v in members {
                if v >= n {
                    return Err(invalid(format!("vertex {v} outside 0..{n}")));
                }
                if labels[v] != usize::MAX {
                    return Err(invalid(format!("vertex {v} is in two communities")));
                }
                labels[v] = c;
            }
        }
        if let Some(v) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(invalid(format!("vertex {v} is in no community")));
        }
        Ok(Self::from_labels(&labels))
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            community_of: (0..n).collect(),
            k: n,
        }
    }

    /// Every vertex in one community.
    pub fn whole(n: usize) -> Self {
        Partition {
            community_of: vec![0; n],
            k: usize::from(n > 0),
        }
    }

    pub fn n(&self) -> usize {
        self.community_of.len()
    }

    /// Number of communities.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn community_of(&self) -> &[usize] {
        &self.community_of
    }

    pub fn sizes(&self) -> Vec<u64> {
        let mut sizes = vec![0; self.k];
        for &c in &self.community_of {
            sizes[c] += 1;
        }
        sizes
    }

    /// Member lists, each in increasing vertex order.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &c) in self.community_of.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    /// Applies a vertex re-indexing: vertex `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        crate::graph::check_permutation(perm, self.n())?;
        let mut labels = vec![0; self.n()];
        for (i, &c) in self.community_of.iter().enumerate() {
            labels[perm[i]] = c;
        }
        Ok(Self::from_labels(&labels))
    }
}

pub(crate) fn check_sizes(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::SizeMismatch { expected, found });
    }
    Ok(())
}

/// `counts[u][w] = |C_u ∩ P_w|`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupCountMatrix {
    k: usize,
    r: usize,
    counts: Vec<u64>,
}

impl GroupCountMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn get(&self, u: usize, w: usize) -> u64 {
        self.counts[u * self.r + w]
    }

    pub fn row(&self, u: usize) -> &[u64] {
        &self.counts[u * self.r..(u + 1) * self.r]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks_exact(self.r.max(1))
    }

    /// Community sizes `|C_u|`.
    pub fn row_sums(&self) -> Vec<u64> {
        self.rows().map(|row| row.iter().sum()).collect()
    }

    /// Group sizes `|P_w|`.
    pub fn column_sums(&self) -> Vec<u64> {
        let mut out = vec![0; self.r];
        for row in self.rows() {
            for (acc, &c) in out.iter_mut().zip(row) {
                *acc += c;
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.rows().map(<[u64]>::to_vec).collect()
    }
}

pub fn group_counts(p: &Partition, ga: &GroupAssignment) -> Result<GroupCountMatrix> {
    check_sizes(ga.n(), p.n())?;
    let r = ga.r();
    let mut counts = vec![0u64; p.k() * r];
    for (&c, &g) in p.community_of().iter().zip(ga.group_of()) {
        counts[c * r + g] += 1;
    }
    Ok(GroupCountMatrix { k: p.k(), r, counts })
}

/// Whether every community reproduces the global group proportions within
/// `tol`: `max_{u,w} | |C_u ∩ P_w| / |C_u| − |P_w| / n | ≤ tol`.
pub fn is_fair(p: &Partition, ga: &GroupAssignment, tol: f64) -> Result<bool> {
    if tol.is_nan() || tol < 0.0 {
        return Err(invalid(format!("tolerance must be non-negative, got {tol}")));
    }
    Ok(max_proportion_deviation(p, ga)? <= tol)
}

/// Largest absolute gap between a community's group proportion and the
/// global one.
pub fn max_proportion_deviation(p: &Partition, ga: &GroupAssignment) -> Result<f64> {
    let counts = group_counts(p, ga)?;
    let n = ga.n() as f64;
    let mut worst = 0.0f64;
    for row in counts.rows() {
        let size: u64 = row.iter().sum();
        for (&c, &s) in row.iter().zip(ga.sizes()) {
            let gap = (c as f64 / size as f64 - s as f64 / n).abs();
            worst = worst.max(gap);
        }
    }
    Ok(worst)
}
