//! Synthetic benchmarks: LFR-style graphs with planted communities,
//! protected-group assignment schemes, and Gaussian blob feature tables.
//!
//! Every generator is a deterministic function of its seed.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::groups::{GroupAssignment, Partition};
use crate::ingest::FeatureTable;

const LFR_ATTEMPTS: usize = 25;
const GROUP_ATTEMPTS: u64 = 1000;
const SIZE_DRAWS: usize = 1000;
const PLACEMENTS: usize = 50;

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parameters of the LFR-style generator. Defaults are the 1000-vertex
/// configuration: degree exponent 2, community-size exponent 1.1, mixing
/// 0.1, degrees in `[20, 100]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LfrParams {
    pub n: usize,
    /// Exponent of the degree distribution.
    pub tau1: f64,
    /// Exponent of the community-size distribution.
    pub tau2: f64,
    /// Expected fraction of each vertex's edges leaving its community.
    pub mu: f64,
    pub min_deg: usize,
    pub max_deg: usize,
    /// Smallest community; defaults to `min_deg`.
    pub min_community: Option<usize>,
    /// Largest community; defaults to the smallest size that can host a
    /// maximum-degree vertex, and at least `max_deg`.
    pub max_community: Option<usize>,
    pub seed: u64,
}

impl Default for LfrParams {
    fn default() -> Self {
        LfrParams {
            n: 1000,
            tau1: 2.0,
            tau2: 1.1,
            mu: 0.1,
            min_deg: 20,
            max_deg: 100,
            min_community: None,
            max_community: None,
            seed: 0,
        }
    }
}

impl LfrParams {
    fn internal_degree(&self, k: usize) -> usize {
        ((1.0 - self.mu) * k as f64 - 1e-9).ceil().max(0.0) as usize
    }

    fn community_bounds(&self) -> (usize, usize) {
        let lo = self.min_community.unwrap_or(self.min_deg);
        let hi = self
            .max_community
            .unwrap_or_else(|| self.max_deg.max(self.internal_degree(self.max_deg) + 1))
            .min(self.n);
        (lo, hi)
    }

    fn validate(&self) -> Result<()> {
        if !(2 <= self.min_deg && self.min_deg <= self.max_deg && self.max_deg < self.n) {
            return Err(invalid(format!(
                "need 2 <= min_deg <= max_deg < n, got min_deg={} max_deg={} n={}",
                self.min_deg, self.max_deg, self.n
            )));
        }
        if !(self.tau1 > 1.0 && self.tau2 > 1.0) {
            return Err(invalid("power-law exponents must exceed 1"));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return Err(invalid(format!("mixing parameter must be in [0, 1), got {}", self.mu)));
        }
        let (lo, hi) = self.community_bounds();
        if lo == 0 || lo > hi {
            return Err(invalid(format!("invalid community size range [{lo}, {hi}]")));
        }
        if hi <= self.internal_degree(self.min_deg) {
            return Err(invalid(format!(
                "largest community ({hi}) cannot host a vertex of degree {}",
                self.min_deg
            )));
        }
        Ok(())
    }
}

/// Generated graph with its planted communities.
#[derive(Debug, Clone)]
pub struct Lfr {
    pub graph: Graph,
    pub truth: Partition,
}

/// LFR-style benchmark by configuration-model stub matching.
///
/// Degrees follow a truncated power law, community sizes another; each
/// vertex puts `⌈(1 − μ) k⌉` stubs inside its community. Stubs are paired at
/// random, and pairs that would form a self-loop, a duplicate edge, or (for
/// external stubs) an intra-community edge are repaired by swapping with an
/// already placed edge, so realised degrees equal the sampled ones.
pub fn lfr(params: &LfrParams) -> Result<Lfr> {
    params.validate()?;
    let mut rng = rng_for(params.seed);
    let mut last_failure = String::new();
    for _ in 0..LFR_ATTEMPTS {
        match lfr_attempt(params, &mut rng) {
            Ok(out) => return Ok(out),
            Err(reason) => last_failure = reason,
        }
    }
    Err(Error::Infeasible(format!(
        "LFR generation failed after {LFR_ATTEMPTS} attempts: {last_failure}"
    )))
}

fn lfr_attempt(params: &LfrParams, rng: &mut ChaCha8Rng) -> std::result::Result<Lfr, String> {
    let n = params.n;
    let degree = sample_power_law(params.min_deg, params.max_deg, params.tau1, n, rng);
    let internal: Vec<usize> = degree.iter().map(|&k| params.internal_degree(k)).collect();

    let (lo, hi) = params.community_bounds();
    let mut sizes = community_sizes(n, lo, hi, params.tau2, rng)?;
    let mut draws = 1;
    while !can_host(&internal, &sizes) {
        if draws == SIZE_DRAWS {
            return Err(format!(
                "no community-size draw out of {SIZE_DRAWS} can host the internal degrees"
            ));
        }
        sizes = community_sizes(n, lo, hi, params.tau2, rng)?;
        draws += 1;
    }

    let mut placements = 0;
    let (community, members, mut degree, internal) = loop {
        let community = assign_communities(&internal, &sizes, rng)?;
        let (mut degree, mut internal) = (degree.clone(), internal.clone());
        let mut members = vec![Vec::new(); sizes.len()];
        for (v, &c) in community.iter().enumerate() {
            members[c].push(v);
        }
        for group in &members {
            even_out_community(group, &mut degree, &mut internal, params);
        }
        if members.iter().all(|g| graphical(g.iter().map(|&v| internal[v]))) {
            break (community, members, degree, internal);
        }
        placements += 1;
        if placements == PLACEMENTS {
            return Err("internal degrees are not realisable as simple graphs".to_string());
        }
    };

    // Internal totals are now even, so the external total has the parity of
    // the degree sum; nudge one degree if that is odd.
    if (0..n).map(|v| degree[v] - internal[v]).sum::<usize>() % 2 == 1 {
        let up: Vec<usize> = (0..n).filter(|&v| degree[v] < params.max_deg).collect();
        let down: Vec<usize> = (0..n)
            .filter(|&v| degree[v] > params.min_deg && degree[v] > internal[v])
            .collect();
        if let Some(&v) = up.choose(rng) {
            degree[v] += 1;
        } else {
            let &v = down.choose(rng).ok_or("cannot make the external stub count even")?;
            degree[v] -= 1;
        }
    }

    let mut present = HashSet::new();
    let mut edges = Vec::new();
    for group in &members {
        let stubs: Vec<usize> = group
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, internal[v]))
            .collect();
        let wired = match wire(stubs, |_, _| true, &mut present, rng) {
            Ok(wired) => wired,
            Err(_) => {
                let wired = dense_wiring(group, &internal, rng)?;
                present.extend(wired.iter().map(|&(u, v)| (u.min(v), u.max(v))));
                wired
            }
        };
        edges.extend(wired);
    }
    let external: Vec<usize> = (0..n)
        .flat_map(|v| std::iter::repeat_n(v, degree[v] - internal[v]))
        .collect();
    edges.extend(wire(
        external,
        |u, v| community[u] != community[v],
        &mut present,
        rng,
    )?);

    let graph = Graph::from_edges(n, edges.into_iter().map(|(u, v)| (u, v, 1.0)))
        .map_err(|e| e.to_string())?;
    Ok(Lfr {
        graph,
        truth: Partition::from_labels(&community),
    })
}

/// `count` draws from `P(k) ∝ k^{-tau}` on the integers `lo..=hi`.
fn sample_power_law(lo: usize, hi: usize, tau: f64, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let weights: Vec<f64> = (lo..=hi).map(|k| (k as f64).powf(-tau)).collect();
    let dist = WeightedIndex::new(&weights).expect("power-law weights are positive");
    (0..count).map(|_| lo + dist.sample(rng)).collect()
}

/// Power-law community sizes summing to exactly `n`, each in `[lo, hi]`.
fn community_sizes(
    n: usize,
    lo: usize,
    hi: usize,
    tau: f64,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Vec<usize>, String> {
    let weights: Vec<f64> = (lo..=hi).map(|k| (k as f64).powf(-tau)).collect();
    let dist = WeightedIndex::new(&weights).expect("power-law weights are positive");
    let mut sizes = Vec::new();
    let mut total = 0;
    while total < n {
        let s = lo + dist.sample(rng);
        sizes.push(s);
        total += s;
    }
    while total > n {
        let shrinkable: Vec<usize> = (0..sizes.len()).filter(|&c| sizes[c] > lo).collect();
        match shrinkable.choose(rng) {
            Some(&c) => {
                sizes[c] -= 1;
                total -= 1;
            }
            None => total -= sizes.pop().expect("total > n > 0"),
        }
    }
    while total < n {
        let growable: Vec<usize> = (0..sizes.len()).filter(|&c| sizes[c] < hi).collect();
        let &c = growable
            .choose(rng)
            .ok_or_else(|| format!("cannot fit {n} vertices into communities of size <= {hi}"))?;
        sizes[c] += 1;
        total += 1;
    }
    Ok(sizes)
}

/// Makes a community's internal stub total even without letting any
/// degree leave `[min_deg, max_deg]` or any internal degree reach the
/// community size. Prefers turning an external stub inside, then growing
/// or shrinking a degree together with its internal part.
fn even_out_community(group: &[usize], degree: &mut [usize], internal: &mut [usize], params: &LfrParams) {
    if group.iter().map(|&v| internal[v]).sum::<usize>() % 2 == 0 {
        return;
    }
    let size = group.len();
    if let Some(&v) = group.iter().find(|&&v| internal[v] < degree[v] && internal[v] + 1 < size) {
        internal[v] += 1;
    } else if let Some(&v) = group
        .iter()
        .find(|&&v| degree[v] < params.max_deg && internal[v] + 1 < size)
    {
        degree[v] += 1;
        internal[v] += 1;
    } else if let Some(&v) = group
        .iter()
        .find(|&&v| internal[v] > 0 && degree[v] > params.min_deg)
    {
        degree[v] -= 1;
        internal[v] -= 1;
    } else if let Some(&v) = group.iter().find(|&&v| internal[v] > 0) {
        // Last resort keeps the degree and sends one stub outside.
        internal[v] -= 1;
    }
}

/// Erdős–Gallai test for a simple graph with the given degrees.
fn graphical(degrees: impl Iterator<Item = usize>) -> bool {
    let mut d: Vec<usize> = degrees.collect();
    d.sort_unstable_by(|a, b| b.cmp(a));
    if d.iter().sum::<usize>() % 2 == 1 {
        return false;
    }
    let mut left = 0;
    for k in 1..=d.len() {
        left += d[k - 1];
        let right = k * (k - 1) + d[k..].iter().map(|&x| x.min(k)).sum::<usize>();
        if left > right {
            return false;
        }
    }
    true
}

/// Whether every vertex can get a seat in a community larger than its
/// internal degree: for each threshold `t`, the vertices with internal
/// degree at least `t` must fit into the communities of size above `t`.
/// Under this condition the greedy placement below never gets stuck.
fn can_host(internal: &[usize], sizes: &[usize]) -> bool {
    let mut needs = internal.to_vec();
    needs.sort_unstable_by(|a, b| b.cmp(a));
    let mut seats = sizes.to_vec();
    seats.sort_unstable_by(|a, b| b.cmp(a));
    let mut capacity = 0;
    let mut next = 0;
    for (count, &t) in needs.iter().enumerate() {
        while next < seats.len() && seats[next] > t {
            capacity += seats[next];
            next += 1;
        }
        if count + 1 > capacity {
            return false;
        }
    }
    true
}

/// Places vertices, largest internal degree first, into communities that
/// still have room and are larger than the vertex's internal degree, picking
/// with probability proportional to the remaining room.
fn assign_communities(
    internal: &[usize],
    sizes: &[usize],
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Vec<usize>, String> {
    let mut order: Vec<usize> = (0..internal.len()).collect();
    order.sort_by(|&x, &y| internal[y].cmp(&internal[x]).then(x.cmp(&y)));
    let mut room = sizes.to_vec();
    let mut community = vec![usize::MAX; internal.len()];
    let mut open: Vec<usize> = Vec::with_capacity(sizes.len());
    for v in order {
        open.clear();
        open.extend((0..sizes.len()).filter(|&c| room[c] > 0 && sizes[c] > internal[v]));
        let &c = open
            .choose_weighted(rng, |&c| room[c])
            .map_err(|_| format!("no community can host internal degree {}", internal[v]))?;
        room[c] -= 1;
        community[v] = c;
    }
    Ok(community)
}

/// Simple graph on `group` with the given degrees, for sequences too dense
/// for stub matching: a Havel–Hakimi construction over a shuffled vertex
/// order, randomised afterwards by degree-preserving double-edge swaps.
fn dense_wiring(
    group: &[usize],
    degree: &[usize],
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Vec<(usize, usize)>, String> {
    let key = |u: usize, v: usize| (u.min(v), u.max(v));
    let mut remaining: Vec<(usize, usize)> = group.iter().map(|&v| (degree[v], v)).collect();
    remaining.shuffle(rng);
    let mut edges = Vec::new();
    loop {
        remaining.sort_by_key(|r| std::cmp::Reverse(r.0));
        let (d, v) = remaining[0];
        if d == 0 {
            break;
        }
        if d >= remaining.len() {
            return Err("internal degrees are not realisable as simple graphs".to_string());
        }
        remaining[0].0 = 0;
        for slot in &mut remaining[1..=d] {
            if slot.0 == 0 {
                return Err("internal degrees are not realisable as simple graphs".to_string());
            }
            slot.0 -= 1;
            edges.push((v, slot.1));
        }
    }

    let mut present: HashSet<(usize, usize)> = edges.iter().map(|&(u, v)| key(u, v)).collect();
    if edges.len() >= 2 {
        for _ in 0..10 * edges.len() {
            let i = rng.random_range(0..edges.len());
            let j = rng.random_range(0..edges.len());
            let (a, b) = edges[i];
            let (mut c, mut d) = edges[j];
            if rng.random_bool(0.5) {
                std::mem::swap(&mut c, &mut d);
            }
            if i == j || a == c || b == d || present.contains(&key(a, c)) || present.contains(&key(b, d)) {
                continue;
            }
            present.remove(&key(a, b));
            present.remove(&key(c, d));
            present.insert(key(a, c));
            present.insert(key(b, d));
            edges[i] = (a, c);
            edges[j] = (b, d);
        }
    }
    Ok(edges)
}

/// Pairs up `stubs` into simple edges accepted by `allowed`, repairing bad
/// pairs by swapping endpoints with already placed edges.
fn wire<F>(
    mut stubs: Vec<usize>,
    allowed: F,
    present: &mut HashSet<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Vec<(usize, usize)>, String>
where
    F: Fn(usize, usize) -> bool,
{
    debug_assert!(stubs.len().is_multiple_of(2));
    stubs.shuffle(rng);
    let key = |u: usize, v: usize| (u.min(v), u.max(v));
    let ok = |u: usize, v: usize, present: &HashSet<(usize, usize)>| {
        u != v && allowed(u, v) && !present.contains(&key(u, v))
    };

    let mut edges = Vec::with_capacity(stubs.len() / 2);
    let mut pending = Vec::new();
    for pair in stubs.chunks_exact(2) {
        let (u, v) = (pair[0], pair[1]);
        if ok(u, v, present) {
            present.insert(key(u, v));
            edges.push((u, v));
        } else {
            pending.push((u, v));
        }
    }

    let mut budget = 200 * pending.len() + 1000;
    while let Some((a, b)) = pending.pop() {
        if budget == 0 {
            for &(u, v) in &edges {
                present.remove(&key(u, v));
            }
            return Err(format!("{} stub pairs could not be wired", pending.len() + 1));
        }
        budget -= 1;
        if ok(a, b, present) {
            present.insert(key(a, b));
            edges.push((a, b));
            continue;
        }
        if edges.is_empty() {
            return Err("no edge available to rewire against".to_string());
        }
        let idx = rng.random_range(0..edges.len());
        let (mut c, mut d) = edges[idx];
        if rng.random_bool(0.5) {
            std::mem::swap(&mut c, &mut d);
        }
        present.remove(&key(c, d));
        let fits = ok(a, c, present) && ok(b, d, present) && key(a, c) != key(b, d);
        if fits {
            edges.swap_remove(idx);
            present.insert(key(a, c));
            present.insert(key(b, d));
            edges.push((a, c));
            edges.push((b, d));
        } else {
            present.insert(key(c, d));
            pending.insert(0, (a, b));
        }
    }
    Ok(edges)
}

/// I.i.d. group labels drawn from `dist`. A draw that leaves some group
/// empty is repeated with the seed incremented by one.
pub fn assign_groups_iid(n: usize, dist: &[f64], seed: u64) -> Result<GroupAssignment> {
    validate_distribution(dist)?;
    if n < dist.len() {
        return Err(invalid(format!(
            "{n} vertices cannot fill {} nonempty groups",
            dist.len()
        )));
    }
    let sampler = WeightedIndex::new(dist).map_err(|e| invalid(e.to_string()))?;
    for attempt in 0..GROUP_ATTEMPTS {
        let mut rng = rng_for(seed.wrapping_add(attempt));
        let labels: Vec<usize> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        if let Ok(ga) = GroupAssignment::from_dense(labels, dist.len()) {
            return Ok(ga);
        }
    }
    Err(Error::Infeasible(format!(
        "every group nonempty not reached in {GROUP_ATTEMPTS} draws"
    )))
}

/// Checks a probability vector: positive finite entries summing to 1
/// within `1e-9`.
pub fn validate_distribution(dist: &[f64]) -> Result<()> {
    if dist.is_empty() {
        return Err(invalid("group distribution is empty"));
    }
    if dist.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(invalid("group probabilities must be positive"));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("group probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Two protected groups with a community-dependent bias: every community
/// `k` of `truth` draws `p_k ~ U[p_low, p_high]` and each member joins
/// group 1 with probability `p_k`. Empty outcomes are redrawn with the seed
/// incremented.
pub fn assign_groups_biased(
    truth: &Partition,
    p_low: f64,
    p_high: f64,
    seed: u64,
) -> Result<GroupAssignment> {
    if !(0.0 < p_low && p_low <= p_high && p_high < 1.0) {
        return Err(invalid(format!(
            "need 0 < p_low <= p_high < 1, got [{p_low}, {p_high}]"
        )));
    }
    if truth.n() < 2 {
        return Err(invalid("two nonempty groups need at least two vertices"));
    }
    for attempt in 0..GROUP_ATTEMPTS {
        let mut rng = rng_for(seed.wrapping_add(attempt));
        let bias: Vec<f64> = (0..truth.k())
            .map(|_| {
                if p_low == p_high {
                    p_low
                } else {
                    rng.random_range(p_low..=p_high)
                }
            })
            .collect();
        let labels: Vec<usize> = truth
            .community_of()
            .iter()
            .map(|&c| usize::from(rng.random_bool(bias[c])))
            .collect();
        if let Ok(ga) = GroupAssignment::from_dense(labels, 2) {
            return Ok(ga);
        }
    }
    Err(Error::Infeasible(format!(
        "both groups nonempty not reached in {GROUP_ATTEMPTS} draws"
    )))
}

/// Isotropic Gaussian clusters and the index of the centre each point was
/// drawn around.
#[derive(Debug, Clone)]
pub struct Blobs {
    pub features: FeatureTable,
    pub labels: Vec<usize>,
}

/// Side of the box centres are drawn from, `[-CENTER_BOX, CENTER_BOX]^d`.
pub const CENTER_BOX: f64 = 10.0;

/// `n` points split evenly (earlier centres take the remainder) among
/// `k_centers` centres drawn uniformly in the centre box, each point a
/// Gaussian with standard deviation `spread` around its centre.
pub fn gaussian_blobs(
    n: usize,
    k_centers: usize,
    dims: usize,
    spread: f64,
    seed: u64,
) -> Result<Blobs> {
    if !(n >= k_centers && k_centers >= 1 && dims >= 1) {
        return Err(invalid(format!(
            "need n >= centers >= 1 and dims >= 1, got n={n} centers={k_centers} dims={dims}"
        )));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(invalid(format!("spread must be positive, got {spread}")));
    }
    let mut rng = rng_for(seed);
    let centers: Vec<Vec<f64>> = (0..k_centers)
        .map(|_| {
            (0..dims)
                .map(|_| rng.random_range(-CENTER_BOX..=CENTER_BOX))
                .collect()
        })
        .collect();
    let noise = Normal::new(0.0, spread).map_err(|e| invalid(e.to_string()))?;
    let mut data = Vec::with_capacity(n * dims);
    let mut labels = Vec::with_capacity(n);
    for (c, center) in centers.iter().enumerate() {
        let count = n / k_centers + usize::from(c < n % k_centers);
        for _ in 0..count {
            data.extend(center.iter().map(|&x| x + noise.sample(&mut rng)));
            labels.push(c);
        }
    }
    let columns = (0..dims).map(|d| format!("f{d}")).collect();
    Ok(Blobs {
        features: FeatureTable::new(columns, data)?,
        labels,
    })
}
