//! From-scratch evaluators for modularity and fairness-modularity.
//!
//! These are the reference values the incremental merge engine is checked
//! against, so they share no code with it beyond the input types.

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, Graph};
use crate::groups::{check_sizes, group_counts, GroupAssignment, GroupCountMatrix, Partition};
use crate::sum::CompensatedSum;

/// Modularity `Q = Σ_u (e_uu − a_u²)` of an undirected graph, where `e_uu`
/// is the weight inside `C_u` counted in both orientations over `2m` and
/// `a_u` is the degree share of `C_u`.
pub fn modularity_q(g: &Graph, p: &Partition) -> Result<f64> {
    check_sizes(g.n(), p.n())?;
    let two_m = 2.0 * g.total_weight();
    if two_m <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let labels = p.community_of();
    let mut inside = vec![CompensatedSum::default(); p.k()];
    for &(i, j, w) in g.edges() {
        if labels[i] == labels[j] {
            inside[labels[i]].add(2.0 * w);
        }
    }
    for &(i, w) in g.loops() {
        inside[labels[i]].add(2.0 * w);
    }
    let mut volume = vec![CompensatedSum::default(); p.k()];
    for (i, &k) in g.degree().iter().enumerate() {
        volume[labels[i]].add(k);
    }
    let mut q = CompensatedSum::default();
    for (e, a) in inside.into_iter().zip(volume) {
        let e = e.value() / two_m;
        let a = a.value() / two_m;
        q.add(e - a * a);
    }
    Ok(q.value())
}

/// Directed modularity
/// `(1/M) Σ_ij Σ_u [A_ij − k^in_i k^out_j / M] S_iu S_ju` with
/// `M = Σ_i k^in_i`.
///
/// With this normaliser a symmetric digraph has exactly the modularity of
/// its undirected collapse.
pub fn directed_modularity(dg: &DirectedGraph, p: &Partition) -> Result<f64> {
    check_sizes(dg.n(), p.n())?;
    let total = dg.total_weight();
    if total <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let labels = p.community_of();
    let k = p.k();
    let mut inside = vec![CompensatedSum::default(); k];
    for &(i, j, w) in dg.arcs() {
        if labels[i] == labels[j] {
            inside[labels[i]].add(w);
        }
    }
    let mut vol_in = vec![CompensatedSum::default(); k];
    let mut vol_out = vec![CompensatedSum::default(); k];
    for i in 0..dg.n() {
        vol_in[labels[i]].add(dg.in_degree()[i]);
        vol_out[labels[i]].add(dg.out_degree()[i]);
    }
    let mut q = CompensatedSum::default();
    for u in 0..k {
        let a_in = vol_in[u].value() / total;
        let a_out = vol_out[u].value() / total;
        q.add(inside[u].value() / total - a_in * a_out);
    }
    Ok(q.value())
}

/// Fairness-modularity `Q^P`: the modularity of `p` on the protected group
/// network, from the count expansion
/// `Q^P = [2m^P Σ_{u,w} c_uw² − Σ_u (Σ_w c_uw |P_w|)²] / (2m^P)²`.
///
/// The numerator is an exact integer, so fair partitions give exactly 0.
pub fn fairness_modularity_qp(ga: &GroupAssignment, p: &Partition) -> Result<f64> {
    let counts = group_counts(p, ga)?;
    Ok(qp_from_counts(&counts, ga))
}

pub(crate) fn qp_from_counts(counts: &GroupCountMatrix, ga: &GroupAssignment) -> f64 {
    let two_m_p = ga.two_m_p() as i128;
    let mut squares: i128 = 0;
    let mut weighted: i128 = 0;
    for row in counts.rows() {
        let mut t: i128 = 0;
        for (&c, &s) in row.iter().zip(ga.sizes()) {
            squares += (c as i128) * (c as i128);
            t += (c as i128) * (s as i128);
        }
        weighted += t * t;
    }
    ratio(two_m_p * squares - weighted, two_m_p)
}

/// `num / den²` with both factors converted once.
fn ratio(num: i128, den: i128) -> f64 {
    let den = den as f64;
    num as f64 / den / den
}

/// Range of `Q^P` for a group assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpBounds {
    /// Always 0; reached exactly by fair partitions.
    pub lower: f64,
    /// `1 − 1/(2m^P)`.
    pub upper: f64,
    /// Value at the all-singletons partition,
    /// `(1/2m^P)(n − Σ_w |P_w|³ / (2m^P))`.
    pub singleton: f64,
}

pub fn qp_bounds(ga: &GroupAssignment) -> QpBounds {
    let two_m_p = ga.two_m_p() as i128;
    let cubes: i128 = ga.sizes().iter().map(|&s| (s as i128).pow(3)).sum();
    QpBounds {
        lower: 0.0,
        upper: 1.0 - 1.0 / two_m_p as f64,
        singleton: ratio(two_m_p * ga.n() as i128 - cubes, two_m_p),
    }
}

/// `Q^P` of the partition whose communities are exactly the protected
/// groups: `1 − Σ_w |P_w|⁴ / (2m^P)²`.
pub fn qp_group_partition(ga: &GroupAssignment) -> f64 {
    let two_m_p = ga.two_m_p() as i128;
    let fourth: i128 = ga.sizes().iter().map(|&s| (s as i128).pow(4)).sum();
    ratio(two_m_p * two_m_p - fourth, two_m_p)
}

/// The protected group network as an explicit digraph: every ordered pair
/// inside a group, self-loops included, with unit weight. `O(Σ |P_w|²)`
/// arcs, so only for verification on small inputs.
pub fn materialize_protected_network(ga: &GroupAssignment) -> DirectedGraph {
    let mut members = vec![Vec::new(); ga.r()];
    for (v, &g) in ga.group_of().iter().enumerate() {
        members[g].push(v);
    }
    let arcs = members
        .iter()
        .flat_map(|group| {
            group
                .iter()
                .flat_map(move |&i| group.iter().map(move |&j| (i, j, 1.0)))
        })
        .collect::<Vec<_>>();
    DirectedGraph::from_arcs(ga.n(), arcs).expect("complete group digraphs are valid")
}
