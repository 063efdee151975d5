//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero when any of them fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use fairfn::agglomerate::MergeState;
use fairfn::generate::{
    assign_groups_biased, assign_groups_iid, gaussian_blobs, lfr, Lfr, LfrParams,
};
use fairfn::groups::{is_fair, max_proportion_deviation};
use fairfn::ingest::{knn_graph, standardize};
use fairfn::metrics::{awd, fairness_ratio};
use fairfn::modularity::{directed_modularity, materialize_protected_network, qp_bounds};
use fairfn::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Group-size vectors `s_1 ≥ … ≥ s_r ≥ 1` summing to `n`.
fn size_vectors(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(left: usize, parts: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for s in (1..=cap.min(left)).rev() {
            if left - s >= parts - 1 {
                cur.push(s);
                go(left - s, parts - 1, s, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(n, r, n, &mut Vec::new(), &mut out);
    out
}

/// Calls `f` on every set partition of `0..n`, as a restricted growth string.
fn for_each_set_partition(n: usize, mut f: impl FnMut(&[usize])) {
    let mut a = vec![0usize; n];
    let mut max = vec![0usize; n];
    loop {
        f(&a);
        let mut i = n - 1;
        loop {
            if i == 0 {
                return;
            }
            if a[i] <= max[i - 1] {
                a[i] += 1;
                let top = max[i - 1].max(a[i]);
                for j in i + 1..n {
                    a[j] = 0;
                    max[j] = top;
                }
                max[i] = top;
                break;
            }
            i -= 1;
        }
    }
}

/// Vertices sorted by group; together with every set partition this covers
/// every assignment with these sizes up to relabelling.
fn grouped(sizes: &[usize]) -> GroupAssignment {
    let labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(w, &s)| std::iter::repeat_n(w, s))
        .collect();
    GroupAssignment::from_dense(labels, sizes.len()).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let jobs: Vec<Vec<usize>> = (2..=10)
        .flat_map(|n| [2, 3].into_iter().flat_map(move |r| size_vectors(n, r)))
        .collect();
    let results: Vec<(u64, Vec<String>)> = jobs
        .par_iter()
        .map(|sizes| {
            let ga = grouped(sizes);
            let mut cases = 0u64;
            let mut bad = Vec::new();
            for_each_set_partition(ga.n(), |labels| {
                cases += 1;
                let p = Partition::from_labels(labels);
                let qp = fairness_modularity_qp(&ga, &p).unwrap();
                let fair = exactly_fair(&ga, &p);
                let verdicts = [
                    qp < 1e-12,
                    is_fair(&p, &ga, 0.0).unwrap(),
                    fairness_ratio(&p, &ga).unwrap().overall == 1.0,
                    awd(&p, &ga).unwrap() == 0.0,
                ];
                if qp < -1e-12 || verdicts.iter().any(|&v| v != fair) {
                    bad.push(format!("sizes {sizes:?} partition {labels:?}"));
                }
            });
            (cases, bad)
        })
        .collect();
    let cases: u64 = results.iter().map(|r| r.0).sum();
    let bad: Vec<&String> = results.iter().flat_map(|r| &r.1).collect();
    let elapsed = start.elapsed();
    let pass = bad.is_empty() && cases >= 100_000 && elapsed < Duration::from_secs(60);
    let first = bad.first().map(|b| format!(", first violation {b}")).unwrap_or_default();
    outcome(
        pass,
        format!("{cases} cases, {} violations, {:.1}s{first}", bad.len(), elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_groups, mut worst_singletons) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let r = rng.random_range(2..=6);
        let sizes: Vec<usize> = (0..r).map(|_| rng.random_range(1..=40)).collect();
        let ga = grouped(&sizes);
        let two_m_p = ga.two_m_p() as f64;

        let by_group = Partition::from_labels(ga.group_of());
        let stated = 1.0 - 1.0 / two_m_p;
        worst_groups = worst_groups.max((fairness_modularity_qp(&ga, &by_group).unwrap() - stated).abs());

        let cubes: f64 = sizes.iter().map(|&s| (s as f64).powi(3)).sum();
        let closed = (ga.n() as f64 - cubes / two_m_p) / two_m_p;
        let got = fairness_modularity_qp(&ga, &Partition::singletons(ga.n())).unwrap();
        worst_singletons = worst_singletons
            .max((got - closed).abs())
            .max((qp_bounds(&ga).singleton - closed).abs());
    }
    let a = worst_groups <= 1e-12;
    let b = worst_singletons <= 1e-12;
    let verdict = |ok: bool| if ok { "pass" } else { "fail" };
    outcome(
        a && b,
        format!(
            "Q^P(groups) = 1 - 1/(2m^P): {} (max gap {worst_groups:.3e}); Q^P(singletons) closed form: {} (max gap {worst_singletons:.3e})",
            verdict(a),
            verdict(b)
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut protected, mut symmetric) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let n = rng.random_range(3..=50);
        let (density, weighted, r) = (rng.random_range(0.05..0.5), rng.random_bool(0.5), rng.random_range(2..=3));
        let g = random_graph(&mut rng, n, density, weighted);
        let ga = random_groups(&mut rng, n, r);
        let p = random_partition(&mut rng, n, 8);
        let direct = directed_modularity(&materialize_protected_network(&ga), &p).unwrap();
        protected = protected.max((fairness_modularity_qp(&ga, &p).unwrap() - direct).abs());
        let bidirected = directed_modularity(&DirectedGraph::bidirected(&g), &p).unwrap();
        symmetric = symmetric.max((bidirected - modularity_q(&g, &p).unwrap()).abs());
    }
    outcome(
        protected <= 1e-10 && symmetric <= 1e-12,
        format!("max |Q^P - directed| {protected:.3e}, max |symmetric - undirected| {symmetric:.3e}"),
    )
}

fn max_drift(g: &Graph, ga: &GroupAssignment, mode: Mode) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut steps = 0;
    fairfn::run_observed(g, ga, f64::INFINITY, mode, |state, record| {
        let p = state.partition();
        steps += 1;
        worst = worst
            .max((record.q - modularity_q(g, &p).unwrap()).abs())
            .max((record.qp - fairness_modularity_qp(ga, &p).unwrap()).abs());
    })
    .unwrap();
    (worst, steps)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut instances = Vec::new();
    for _ in 0..20 {
        let n = rng.random_range(20..=200);
        let p = rng.random_range(2.0..8.0) / n as f64;
        let (weighted, r) = (rng.random_bool(0.5), rng.random_range(2..=3));
        let g = random_graph(&mut rng, n, p, weighted);
        let ga = random_groups(&mut rng, n, r);
        instances.push((g, ga));
    }
    for seed in 0..5 {
        let params = LfrParams { n: 200, min_deg: 8, max_deg: 30, seed, ..LfrParams::default() };
        let g = lfr(&params).unwrap().graph;
        let ga = assign_groups_iid(200, &[0.5, 0.5], seed).unwrap();
        instances.push((g, ga));
    }
    let (mut worst, mut steps) = (0.0f64, 0usize);
    for (g, ga) in &instances {
        for mode in [Mode::Fn, Mode::FairFn] {
            let (d, s) = max_drift(g, ga, mode);
            worst = worst.max(d);
            steps += s;
        }
    }
    outcome(
        worst <= 1e-9,
        format!("{} instances, {steps} merge steps, max drift {worst:.3e}", instances.len()),
    )
}

/// The 1000-vertex LFR instance shared by criteria 5 and 9.
fn shared_lfr() -> Lfr {
    let params = LfrParams {
        min_community: Some(100),
        max_community: Some(300),
        ..LfrParams::default()
    };
    lfr(&params).unwrap()
}

fn timed_run(g: &Graph, ga: &GroupAssignment, alpha: f64, mode: Mode) -> (Detection, Duration) {
    let start = Instant::now();
    let d = run(g, ga, alpha, mode).unwrap();
    (d, start.elapsed())
}

fn criterion_5(bench: &Lfr) -> Outcome {
    let g = &bench.graph;
    let iid = assign_groups_iid(g.n(), &[0.5, 0.5], 0).unwrap();
    let biased = assign_groups_biased(&bench.truth, 0.2, 0.8, 0).unwrap();
    let (fair, t1) = timed_run(g, &iid, 8.0, Mode::FairFn);
    let (plain, t2) = timed_run(g, &iid, 8.0, Mode::Fn);
    let (plain_biased, t3) = timed_run(g, &biased, 8.0, Mode::Fn);
    let (fair_biased, t4) = timed_run(g, &biased, 8.0, Mode::FairFn);

    let fr = fairness_ratio(&fair.partition, &iid).unwrap().overall;
    let awd = awd(&fair.partition, &iid).unwrap();
    let q = modularity_q(g, &fair.partition).unwrap();
    let q_fn = modularity_q(g, &plain.partition).unwrap();
    let dev_fn = max_proportion_deviation(&plain_biased.partition, &biased).unwrap();
    let dev_fair = max_proportion_deviation(&fair_biased.partition, &biased).unwrap();
    let slowest = [t1, t2, t3, t4].into_iter().max().unwrap();

    let pass = fr >= 0.95
        && awd <= 0.005
        && q >= 0.55
        && (q_fn - q).abs() <= 0.06
        && dev_fn >= 0.05
        && dev_fair <= 0.01
        && slowest < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "FairFN FR {fr:.4} AWD {awd:.5} Q {q:.4} ({} communities), FN Q {q_fn:.4}; biased deviation FN {dev_fn:.4} FairFN {dev_fair:.4}; slowest run {:.2}s",
            fair.partition.k(),
            slowest.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let params = LfrParams {
        min_community: Some(160),
        max_community: Some(180),
        ..LfrParams::default()
    };
    let bench = lfr(&params).unwrap();
    let labels = bench.truth.community_of();
    let weighted = Graph::from_edges(
        bench.graph.n(),
        bench.graph.edges().iter().map(|&(u, v, _)| {
            (u, v, if labels[u] == labels[v] { 50.0 } else { 10.0 })
        }),
    )
    .unwrap();
    let ga = assign_groups_iid(bench.graph.n(), &[0.5, 0.5], 0).unwrap();
    let plain = run(&bench.graph, &ga, 8.0, Mode::FairFn).unwrap();
    let heavy = run(&weighted, &ga, 8.0, Mode::FairFn).unwrap();

    // Where the two runs choose the same merges, the gains must agree bit for bit.
    let prefix = plain
        .trace
        .records
        .iter()
        .zip(&heavy.trace.records)
        .take_while(|(a, b)| (a.merged_a, a.merged_b) == (b.merged_a, b.merged_b))
        .count();
    let prefix_equal = plain
        .trace
        .records
        .iter()
        .zip(&heavy.trace.records)
        .take(prefix)
        .all(|(a, b)| a.delta_qp.to_bits() == b.delta_qp.to_bits());
    // Forcing the weighted run's merge sequence onto the unweighted graph
    // makes the sequences coincide over the whole run.
    let mut state = MergeState::new(&bench.graph, &ga).unwrap();
    let replay_equal = heavy.trace.records.iter().all(|r| {
        let (_, dqp) = state.apply_merge(r.merged_a, r.merged_b).unwrap();
        dqp.to_bits() == r.delta_qp.to_bits()
    });

    let fr_u = fairness_ratio(&plain.partition, &ga).unwrap().overall;
    let awd_u = awd(&plain.partition, &ga).unwrap();
    let fr_w = fairness_ratio(&heavy.partition, &ga).unwrap().overall;
    let awd_w = awd(&heavy.partition, &ga).unwrap();
    let pass = prefix_equal
        && replay_equal
        && fr_u >= 0.95
        && fr_w >= 0.95
        && awd_u <= 0.005
        && awd_w <= 0.005;
    outcome(
        pass,
        format!(
            "{} planted communities; unweighted FR {fr_u:.4} AWD {awd_u:.5}, weighted FR {fr_w:.4} AWD {awd_w:.5}; common prefix {prefix} bitwise {prefix_equal}; full replay of {} merges bitwise {replay_equal}",
            bench.truth.k(),
            heavy.trace.records.len()
        ),
    )
}

fn blob_graph(seed: u64) -> Graph {
    let blobs = gaussian_blobs(3000, 5, 2, 1.0, seed).unwrap();
    knn_graph(&standardize(&blobs.features), 10).unwrap()
}

fn criterion_7(g: &Graph) -> Outcome {
    let ga = assign_groups_iid(g.n(), &[0.02, 0.05, 0.93], 0).unwrap();
    let d = run(g, &ga, 64.0, Mode::FairFn).unwrap();
    let fr = fairness_ratio(&d.partition, &ga).unwrap().overall;
    let awd = awd(&d.partition, &ga).unwrap();
    let q = modularity_q(g, &d.partition).unwrap();
    outcome(
        awd <= 0.01 && q >= 0.80,
        format!("AWD {awd:.5} Q {q:.4} FR {fr:.4} (not gated), {} communities", d.partition.k()),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut merges, mut broken, mut worst) = (0usize, 0usize, 0.0f64);
    for _ in 0..100 {
        let r = rng.random_range(2..=4);
        let shares: Vec<usize> = (0..r).map(|_| rng.random_range(1..=4)).collect();
        let k = rng.random_range(3..=8);
        let mut pairs: Vec<(usize, usize)> = (0..k)
            .flat_map(|c| {
                shares
                    .iter()
                    .enumerate()
                    .flat_map(move |(w, &t)| std::iter::repeat_n((w, c), t))
            })
            .collect();
        pairs.shuffle(&mut rng);
        let groups: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let communities: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let ga = GroupAssignment::from_dense(groups, r).unwrap();
        assert!(exactly_fair(&ga, &Partition::from_labels(&communities)));
        for i in 0..k {
            for j in i + 1..k {
                let merged: Vec<usize> = communities.iter().map(|&c| if c == j { i } else { c }).collect();
                let p = Partition::from_labels(&merged);
                let qp = fairness_modularity_qp(&ga, &p).unwrap().abs();
                worst = worst.max(qp);
                if !is_fair(&p, &ga, 1e-9).unwrap() || qp > 1e-12 {
                    broken += 1;
                }
                merges += 1;
            }
        }
    }
    outcome(
        broken == 0,
        format!("{merges} merges of fair communities, {broken} unfair results, max |Q^P| {worst:.3e}"),
    )
}

fn criterion_9(bench: &Lfr) -> Outcome {
    let ga = assign_groups_iid(bench.graph.n(), &[0.5, 0.5], 0).unwrap();
    let d = run(&bench.graph, &ga, f64::INFINITY, Mode::FairFn).unwrap();
    let curve: Vec<f64> = d.trace.alpha_threshold_curve().into_iter().map(|c| c.1).collect();
    let mut first_half = curve[..curve.len() / 2].to_vec();
    first_half.sort_by(f64::total_cmp);
    let median = first_half[first_half.len() / 2];
    let late = curve[curve.len().saturating_sub(10)..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        late >= 10.0 * median.abs(),
        format!(
            "{} merges; first-half median {median:.3}, last-10 max {late:.3} ({:.0}x)",
            curve.len(),
            late / median.abs()
        ),
    )
}

fn criterion_10(g: &Graph) -> Outcome {
    let ga = assign_groups_iid(g.n(), &[0.5, 0.5], 0).unwrap();
    let d = run(g, &ga, 4.0, Mode::FairFn).unwrap();
    let fr = fairness_ratio(&d.partition, &ga).unwrap().overall;
    let awd = awd(&d.partition, &ga).unwrap();
    let q = modularity_q(g, &d.partition).unwrap();
    outcome(
        fr >= 0.90 && awd <= 0.01 && q >= 0.85,
        format!("FR {fr:.4} AWD {awd:.5} Q {q:.4}, {} communities", d.partition.k()),
    )
}

fn main() -> ExitCode {
    let bench = shared_lfr();
    let blobs = blob_graph(0);
    let checks: Vec<(usize, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(|| criterion_5(&bench))),
        (6, Box::new(criterion_6)),
        (7, Box::new(|| criterion_7(&blobs))),
        (8, Box::new(criterion_8)),
        (9, Box::new(|| criterion_9(&bench))),
        (10, Box::new(|| criterion_10(&blobs))),
    ];
    let mut failed = 0;
    for (id, check) in checks {
        let result = check();
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {id}: {} {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {failed} of 10 criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
