//! Greedy agglomerative modularity maximisation: Fast Newman (FN) and its
//! fairness-constrained variant (FairFN).
//!
//! Both start from singleton communities and repeatedly merge the pair with
//! the largest modularity gain `ΔQ_uv = 2(e_uv − a_u a_v)`. FairFN only
//! considers pairs whose fairness-modularity gain
//! `ΔQ^P_uv = 2(e^P_uv − a^P_u a^P_v)` is strictly negative. Merging stops
//! once no eligible pair has `ΔQ > −α / (2m)`.
//!
//! The protected-network terms are kept as integer group counts:
//! `e^P_uv = Σ_w c_uw c_vw / (2m^P)` and `a^P_u = Σ_w c_uw |P_w| / (2m^P)`,
//! which makes the sign test on `ΔQ^P` exact.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::groups::{check_sizes, GroupAssignment, Partition};
use crate::metrics::{community_fairness_ratio, community_wasserstein};
use crate::par::*;
use crate::sum::{sum, CompensatedSum};

/// Which greedy rule to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Plain Fast Newman.
    Fn,
    /// Fast Newman restricted to merges with `ΔQ^P < 0`.
    FairFn,
}

impl Mode {
    pub fn fairness_on(self) -> bool {
        matches!(self, Mode::FairFn)
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fn" => Ok(Mode::Fn),
            "fairfn" => Ok(Mode::FairFn),
            other => Err(invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Fn => "fn",
            Mode::FairFn => "fairfn",
        })
    }
}

/// A candidate merge of communities `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeCandidate {
    pub u: usize,
    pub v: usize,
    pub delta_q: f64,
    pub delta_qp: f64,
}

impl MergeCandidate {
    /// Larger `ΔQ` first, then the lexicographically smaller pair.
    fn rank(&self, other: &Self) -> Ordering {
        self.delta_q
            .total_cmp(&other.delta_q)
            .then_with(|| (other.u, other.v).cmp(&(self.u, self.v)))
    }

    fn better(a: Option<Self>, b: Option<Self>) -> Option<Self> {
        match (a, b) {
            (Some(x), Some(y)) => Some(if x.rank(&y) == Ordering::Less { y } else { x }),
            (x, None) => x,
            (None, y) => y,
        }
    }
}

/// Live state of the agglomeration.
///
/// Community ids are the ids of their surviving seed vertex; a merge of
/// `u` and `v` keeps `u`.
#[derive(Debug, Clone)]
pub struct MergeState {
    group_sizes: Vec<u64>,
    two_m: f64,
    two_m_p: u64,
    active: Vec<bool>,
    active_ids: Vec<usize>,
    slot: Vec<usize>,
    a: Vec<f64>,
    self_e: Vec<f64>,
    links: Vec<HashMap<usize, f64>>,
    counts: Vec<u64>,
    weighted: Vec<u64>,
    a_p: Vec<f64>,
    members: Vec<Vec<usize>>,
    q: f64,
    qp: f64,
}

impl MergeState {
    /// Singleton communities with `e_ij = w_ij / (2m)`, `a_i = k_i / (2m)`,
    /// `c_i` the unit vector of `i`'s group and `a^P_i = |P_{g(i)}| / (2m^P)`.
    pub fn new(g: &Graph, ga: &GroupAssignment) -> Result<Self> {
        check_sizes(g.n(), ga.n())?;
        let n = g.n();
        if n == 0 {
            return Err(invalid("graph has no vertices"));
        }
        let two_m = 2.0 * g.total_weight();
        if two_m <= 0.0 {
            return Err(Error::EmptyGraph);
        }
        let r = ga.r();
        let two_m_p = ga.two_m_p();

        let mut links = vec![HashMap::new(); n];
        for &(i, j, w) in g.edges() {
            links[i].insert(j, w / two_m);
            links[j].insert(i, w / two_m);
        }
        let mut self_e = vec![0.0; n];
        for &(i, w) in g.loops() {
            self_e[i] += 2.0 * w / two_m;
        }
        let a: Vec<f64> = g.degree().iter().map(|k| k / two_m).collect();

        let mut counts = vec![0u64; n * r];
        let mut weighted = vec![0u64; n];
        for (i, &grp) in ga.group_of().iter().enumerate() {
            counts[i * r + grp] = 1;
            weighted[i] = ga.sizes()[grp];
        }
        let a_p = weighted.iter().map(|&t| t as f64 / two_m_p as f64).collect();

        let q = sum(self_e.iter().zip(&a).map(|(e, a)| e - a * a));
        let cubes: i128 = ga.sizes().iter().map(|&s| (s as i128).pow(3)).sum();
        let qp = exact_ratio(two_m_p as i128 * n as i128 - cubes, two_m_p);

        Ok(MergeState {
            group_sizes: ga.sizes().to_vec(),
            two_m,
            two_m_p,
            active: vec![true; n],
            active_ids: (0..n).collect(),
            slot: (0..n).collect(),
            a,
            self_e,
            links,
            counts,
            weighted,
            a_p,
            members: (0..n).map(|i| vec![i]).collect(),
            q,
            qp,
        })
    }

    pub fn n(&self) -> usize {
        self.active.len()
    }

    fn r(&self) -> usize {
        self.group_sizes.len()
    }

    /// `2m` of the observed graph.
    pub fn two_m(&self) -> f64 {
        self.two_m
    }

    pub fn num_communities(&self) -> usize {
        self.active_ids.len()
    }

    pub fn is_active(&self, u: usize) -> bool {
        self.active.get(u).copied().unwrap_or(false)
    }

    /// Ids of live communities, in no particular order.
    pub fn active_ids(&self) -> &[usize] {
        &self.active_ids
    }

    /// Accumulated modularity of the current partition.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Accumulated fairness-modularity of the current partition.
    pub fn qp(&self) -> f64 {
        self.qp
    }

    pub fn a(&self, u: usize) -> f64 {
        self.a[u]
    }

    pub fn a_p(&self, u: usize) -> f64 {
        self.a_p[u]
    }

    /// `e_uv`; zero for unlinked pairs, the internal share for `u == v`.
    pub fn e(&self, u: usize, v: usize) -> f64 {
        if u == v {
            self.self_e[u]
        } else {
            self.links[u].get(&v).copied().unwrap_or(0.0)
        }
    }

    /// `e^P_uv = Σ_w c_uw c_vw / (2m^P)`.
    pub fn e_p(&self, u: usize, v: usize) -> f64 {
        self.dot(u, v) as f64 / self.two_m_p as f64
    }

    pub fn group_counts(&self, u: usize) -> &[u64] {
        let r = self.r();
        &self.counts[u * r..(u + 1) * r]
    }

    pub fn members(&self, u: usize) -> &[usize] {
        &self.members[u]
    }

    /// Current communities as a dense partition.
    pub fn partition(&self) -> Partition {
        let mut labels = vec![0; self.n()];
        for &u in &self.active_ids {
            for &v in &self.members[u] {
                labels[v] = u;
            }
        }
        Partition::from_labels(&labels)
    }

    fn dot(&self, u: usize, v: usize) -> u64 {
        self.group_counts(u)
            .iter()
            .zip(self.group_counts(v))
            .map(|(x, y)| x * y)
            .sum()
    }

    /// `(2m^P)² ΔQ^P_uv / 2`, exact.
    fn qp_numerator(&self, u: usize, v: usize) -> i128 {
        self.two_m_p as i128 * self.dot(u, v) as i128
            - self.weighted[u] as i128 * self.weighted[v] as i128
    }

    fn candidate(&self, u: usize, v: usize, e_uv: f64) -> (MergeCandidate, bool) {
        let num = self.qp_numerator(u, v);
        let cand = MergeCandidate {
            u: u.min(v),
            v: u.max(v),
            delta_q: 2.0 * (e_uv - self.a[u] * self.a[v]),
            delta_qp: 2.0 * exact_ratio(num, self.two_m_p),
        };
        (cand, num < 0)
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        for id in [u, v] {
            if !self.is_active(id) {
                return Err(Error::InactiveCommunity(id));
            }
        }
        if u == v {
            return Err(invalid("cannot pair a community with itself"));
        }
        Ok(())
    }

    /// `(ΔQ_uv, ΔQ^P_uv)` for two distinct live communities.
    pub fn pair_deltas(&self, u: usize, v: usize) -> Result<(f64, f64)> {
        self.check_pair(u, v)?;
        let (cand, _) = self.candidate(u, v, self.e(u, v));
        Ok((cand.delta_q, cand.delta_qp))
    }

    /// The eligible pair with the largest `ΔQ`, provided that gain exceeds
    /// `−α / (2m)`. With `fairness_on`, eligible means `ΔQ^P < 0`.
    ///
    /// Linked pairs are scanned in parallel. Unlinked pairs all have
    /// `ΔQ = −2 a_u a_v`, so they are searched in order of increasing
    /// `a` and only when the smallest such product could still win.
    pub fn best_feasible_merge(&self, alpha: f64, fairness_on: bool) -> Option<MergeCandidate> {
        if self.num_communities() < 2 {
            return None;
        }
        let cutoff = -alpha / self.two_m;
        let linked = self
            .active_ids
            .par_iter()
            .filter_map(|&u| {
                let mut best: Option<MergeCandidate> = None;
                for (&v, &e_uv) in &self.links[u] {
                    if v < u {
                        continue;
                    }
                    let (cand, fair) = self.candidate(u, v, e_uv);
                    if fair || !fairness_on {
                        best = MergeCandidate::better(best, Some(cand));
                    }
                }
                best
            })
            .max_by(|x, y| x.rank(y));

        let best = self.best_unlinked(cutoff, linked, fairness_on);
        best.filter(|c| c.delta_q > cutoff)
    }

    fn best_unlinked(
        &self,
        cutoff: f64,
        incumbent: Option<MergeCandidate>,
        fairness_on: bool,
    ) -> Option<MergeCandidate> {
        let mut order = self.active_ids.clone();
        order.sort_by(|&x, &y| self.a[x].total_cmp(&self.a[y]).then(x.cmp(&y)));
        let gain = |x: usize, y: usize| 2.0 * (0.0 - self.a[x] * self.a[y]);
        // nothing unlinked can reach the incumbent or the stopping cutoff
        let floor = |best: &Option<MergeCandidate>| best.map_or(cutoff, |b| b.delta_q.max(cutoff));
        let mut best = incumbent;
        if gain(order[0], order[1]) < floor(&best) || gain(order[0], order[1]) <= cutoff {
            return best;
        }
        for (i, &u) in order.iter().enumerate() {
            match order.get(i + 1) {
                Some(&next) if gain(u, next) >= floor(&best) && gain(u, next) > cutoff => {}
                _ => break,
            }
            for &v in &order[i + 1..] {
                let dq = gain(u, v);
                if dq < floor(&best) || dq <= cutoff {
                    break;
                }
                if self.links[u].contains_key(&v) {
                    continue;
                }
                let (cand, fair) = self.candidate(u, v, 0.0);
                if fair || !fairness_on {
                    best = MergeCandidate::better(best, Some(cand));
                }
            }
        }
        best
    }

    /// Merges `v` into `u`, applying the additive updates to `e`, `a`, the
    /// group counts and `a^P`, and accumulating `ΔQ` and `ΔQ^P`.
    pub fn apply_merge(&mut self, u: usize, v: usize) -> Result<(f64, f64)> {
        self.check_pair(u, v)?;
        let (dq, dqp) = self.pair_deltas(u, v)?;

        let moved = std::mem::take(&mut self.links[v]);
        let e_uv = moved.get(&u).copied().unwrap_or(0.0);
        self.self_e[u] += self.self_e[v] + 2.0 * e_uv;
        self.self_e[v] = 0.0;
        self.links[u].remove(&v);
        for (k, e_vk) in moved {
            if k == u {
                continue;
            }
            let link = self.links[k].remove(&v).expect("links are symmetric");
            debug_assert_eq!(link, e_vk);
            *self.links[u].entry(k).or_insert(0.0) += e_vk;
            let updated = self.links[u][&k];
            self.links[k].insert(u, updated);
        }

        self.a[u] += self.a[v];
        self.a[v] = 0.0;
        let r = self.r();
        for w in 0..r {
            self.counts[u * r + w] += self.counts[v * r + w];
            self.counts[v * r + w] = 0;
        }
        self.weighted[u] += self.weighted[v];
        self.weighted[v] = 0;
        self.a_p[u] = self.weighted[u] as f64 / self.two_m_p as f64;
        self.a_p[v] = 0.0;
        let moved_members = std::mem::take(&mut self.members[v]);
        self.members[u].extend(moved_members);

        self.active[v] = false;
        let at = self.slot[v];
        self.active_ids.swap_remove(at);
        if let Some(&shifted) = self.active_ids.get(at) {
            self.slot[shifted] = at;
        }

        self.q += dq;
        self.qp += dqp;
        Ok((dq, dqp))
    }
}

fn exact_ratio(num: i128, two_m_p: u64) -> f64 {
    let den = two_m_p as f64;
    num as f64 / den / den
}

/// One merge step.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeRecord {
    pub step: usize,
    /// Surviving community id.
    pub merged_a: usize,
    /// Absorbed community id.
    pub merged_b: usize,
    pub delta_q: f64,
    pub delta_qp: f64,
    pub q: f64,
    pub qp: f64,
    pub num_communities: usize,
    pub fr: f64,
    pub awd: f64,
    /// Smallest `α` that permits this merge: `−2m · ΔQ_max`, where
    /// `ΔQ_max` is taken over the eligible pairs.
    pub alpha_threshold: f64,
}

/// Metrics of the partition before any merge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStart {
    pub q: f64,
    pub qp: f64,
    pub fr: f64,
    pub awd: f64,
    pub num_communities: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeTrace {
    pub n: usize,
    pub two_m: f64,
    pub start: TraceStart,
    pub records: Vec<MergeRecord>,
}

impl MergeTrace {
    /// `(communities before the merge, α threshold)` per step, in order of
    /// decreasing community count.
    pub fn alpha_threshold_curve(&self) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .map(|r| (r.num_communities + 1, r.alpha_threshold))
            .collect()
    }

    /// Partition after the first `steps` merges.
    pub fn partition_at(&self, steps: usize) -> Partition {
        let mut owner: Vec<usize> = (0..self.n).collect();
        for rec in self.records.iter().take(steps) {
            owner[rec.merged_b] = rec.merged_a;
        }
        let labels: Vec<usize> = (0..self.n).map(|v| find(&owner, v)).collect();
        Partition::from_labels(&labels)
    }

    /// Step count (0 = singletons) with the highest modularity and that
    /// modularity; the earliest step wins ties.
    pub fn best_q(&self) -> (usize, f64) {
        let mut best = (0, self.start.q);
        for rec in &self.records {
            if rec.q > best.1 {
                best = (rec.step, rec.q);
            }
        }
        best
    }
}

fn find(owner: &[usize], mut v: usize) -> usize {
    while owner[v] != v {
        v = owner[v];
    }
    v
}

/// Final partition and full merge history of one run.
#[derive(Debug, Clone)]
pub struct Detection {
    pub partition: Partition,
    pub trace: MergeTrace,
}

/// Runs FN or FairFN to its stopping point.
pub fn run(g: &Graph, ga: &GroupAssignment, alpha: f64, mode: Mode) -> Result<Detection> {
    run_observed(g, ga, alpha, mode, |_, _| {})
}

/// [`run`], calling `observer` after every merge with the updated state.
pub fn run_observed<F>(
    g: &Graph,
    ga: &GroupAssignment,
    alpha: f64,
    mode: Mode,
    mut observer: F,
) -> Result<Detection>
where
    F: FnMut(&MergeState, &MergeRecord),
{
    if alpha.is_nan() || alpha < 0.0 {
        return Err(invalid(format!("alpha must be non-negative, got {alpha}")));
    }
    let mut state = MergeState::new(g, ga)?;
    let mut fairness = FairnessCache::new(&state, ga.n() as u64);
    let start = TraceStart {
        q: state.q(),
        qp: state.qp(),
        fr: fairness.fr(&state),
        awd: fairness.awd(&state),
        num_communities: state.num_communities(),
    };
    let mut records = Vec::new();
    while let Some(best) = state.best_feasible_merge(alpha, mode.fairness_on()) {
        let (delta_q, delta_qp) = state.apply_merge(best.u, best.v)?;
        fairness.update(&state, best.u);
        let record = MergeRecord {
            step: records.len() + 1,
            merged_a: best.u,
            merged_b: best.v,
            delta_q,
            delta_qp,
            q: state.q(),
            qp: state.qp(),
            num_communities: state.num_communities(),
            fr: fairness.fr(&state),
            awd: fairness.awd(&state),
            alpha_threshold: -state.two_m() * best.delta_q,
        };
        observer(&state, &record);
        records.push(record);
    }
    Ok(Detection {
        partition: state.partition(),
        trace: MergeTrace {
            n: state.n(),
            two_m: state.two_m(),
            start,
            records,
        },
    })
}

/// Per-community FR and Wasserstein terms, refreshed for the survivor of
/// each merge.
struct FairnessCache {
    n: u64,
    fr: Vec<f64>,
    weighted_wd: Vec<f64>,
}

impl FairnessCache {
    fn new(state: &MergeState, n: u64) -> Self {
        let mut cache = FairnessCache {
            n,
            fr: vec![0.0; state.n()],
            weighted_wd: vec![0.0; state.n()],
        };
        for u in 0..state.n() {
            cache.update(state, u);
        }
        cache
    }

    fn update(&mut self, state: &MergeState, u: usize) {
        let row = state.group_counts(u);
        let size: u64 = row.iter().sum();
        self.fr[u] = community_fairness_ratio(row, &state.group_sizes, self.n);
        self.weighted_wd[u] = size as f64 * community_wasserstein(row, &state.group_sizes, self.n);
    }

    fn fr(&self, state: &MergeState) -> f64 {
        state.active_ids().iter().map(|&u| self.fr[u]).fold(1.0, f64::min)
    }

    fn awd(&self, state: &MergeState) -> f64 {
        let mut ids = state.active_ids().to_vec();
        ids.sort_unstable();
        let total: CompensatedSum = ids.into_iter().map(|u| self.weighted_wd[u]).collect();
        total.value() / self.n as f64
    }
}
