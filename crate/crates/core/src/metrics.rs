//! Fairness and agreement metrics for partitions.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::Result;
use crate::formats::fmt_float;
use crate::graph::Graph;
use crate::groups::{check_sizes, group_counts, GroupAssignment, Partition};
use crate::modularity::{fairness_modularity_qp, modularity_q};
use crate::sum::CompensatedSum;

/// Fairness ratio of one community with group counts `row`:
/// `min_w min(r(u,w)/r(w), r(w)/r(u,w))`, zero when a group is missing.
pub fn community_fairness_ratio(row: &[u64], group_sizes: &[u64], n: u64) -> f64 {
    let size: u64 = row.iter().sum();
    let mut worst = 1.0f64;
    for (&c, &s) in row.iter().zip(group_sizes) {
        if c == 0 {
            return 0.0;
        }
        // r(u,w)/r(w) = c·n / (s·|C_u|)
        let a = c as u128 * n as u128;
        let b = s as u128 * size as u128;
        if a != b {
            worst = worst.min(a.min(b) as f64 / a.max(b) as f64);
        }
    }
    worst
}

/// 1-Wasserstein distance on unit-spaced group indices between a
/// community's group distribution and the global one, as the sum of
/// absolute cumulative differences.
pub fn community_wasserstein(row: &[u64], group_sizes: &[u64], n: u64) -> f64 {
    let size: u64 = row.iter().sum();
    let r = row.len();
    let mut cum_c: i128 = 0;
    let mut cum_s: i128 = 0;
    let mut total: i128 = 0;
    for w in 0..r.saturating_sub(1) {
        cum_c += row[w] as i128;
        cum_s += group_sizes[w] as i128;
        total += (cum_c * n as i128 - cum_s * size as i128).abs();
    }
    total as f64 / (size as f64 * n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessRatio {
    pub per_community: Vec<f64>,
    pub overall: f64,
}

pub fn fairness_ratio(p: &Partition, ga: &GroupAssignment) -> Result<FairnessRatio> {
    let counts = group_counts(p, ga)?;
    let n = ga.n() as u64;
    let per_community: Vec<f64> = counts
        .rows()
        .map(|row| community_fairness_ratio(row, ga.sizes(), n))
        .collect();
    let overall = per_community.iter().copied().fold(1.0, f64::min);
    Ok(FairnessRatio {
        per_community,
        overall,
    })
}

/// Average Wasserstein distance `Σ_u |C_u| · WD(p_u, p) / n`.
pub fn awd(p: &Partition, ga: &GroupAssignment) -> Result<f64> {
    let counts = group_counts(p, ga)?;
    let n = ga.n() as u64;
    let mut acc = CompensatedSum::default();
    for row in counts.rows() {
        let size: u64 = row.iter().sum();
        acc.add(size as f64 * community_wasserstein(row, ga.sizes(), n));
    }
    Ok(acc.value() / n as f64)
}

/// Normalised mutual information, normalised by the arithmetic mean of the
/// two entropies.
///
/// When both entropies vanish both sides are a single cluster and the value
/// is 1. When only one vanishes the mutual information is 0 and so is the
/// result.
pub fn nmi(p: &Partition, truth: &Partition) -> Result<f64> {
    check_sizes(truth.n(), p.n())?;
    let n = p.n() as f64;
    if p.n() == 0 {
        return Ok(1.0);
    }
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    for (&a, &b) in p.community_of().iter().zip(truth.community_of()) {
        *joint.entry((a, b)).or_default() += 1;
    }
    let left = p.sizes();
    let right = truth.sizes();
    let entropy = |sizes: &[u64]| -> f64 {
        -crate::sum::sum(sizes.iter().filter(|&&c| c > 0).map(|&c| {
            let q = c as f64 / n;
            q * q.ln()
        }))
    };
    let h_left = entropy(&left);
    let h_right = entropy(&right);
    if h_left + h_right == 0.0 {
        return Ok(1.0);
    }
    let mut cells: Vec<_> = joint.into_iter().collect();
    cells.sort_unstable();
    let mutual = crate::sum::sum(cells.into_iter().map(|((a, b), c)| {
        let pab = c as f64 / n;
        pab * (c as f64 * n / (left[a] as f64 * right[b] as f64)).ln()
    }));
    Ok((mutual / ((h_left + h_right) / 2.0)).clamp(0.0, 1.0))
}

/// Evaluation summary of one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub fr: f64,
    pub awd: f64,
    pub q: f64,
    pub qp: f64,
    pub nmi: Option<f64>,
    pub num_communities: usize,
}

impl Report {
    pub fn evaluate(
        g: &Graph,
        ga: &GroupAssignment,
        p: &Partition,
        truth: Option<&Partition>,
    ) -> Result<Self> {
        check_sizes(g.n(), ga.n())?;
        Ok(Report {
            fr: fairness_ratio(p, ga)?.overall,
            awd: awd(p, ga)?,
            q: modularity_q(g, p)?,
            qp: fairness_modularity_qp(ga, p)?,
            nmi: truth.map(|t| nmi(p, t)).transpose()?,
            num_communities: p.k(),
        })
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("fr", fmt_float(self.fr)),
            ("awd", fmt_float(self.awd)),
            ("q", fmt_float(self.q)),
            ("qp", fmt_float(self.qp)),
            ("qp_x100", fmt_float(self.qp * 100.0)),
        ];
        if let Some(nmi) = self.nmi {
            out.push(("nmi", fmt_float(nmi)));
        }
        out.push(("num_communities", self.num_communities.to_string()));
        out
    }

    /// Header line plus one value line.
    pub fn to_csv(&self) -> String {
        let fields = self.fields();
        let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
        let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
        format!("{}\n{}\n", header.join(","), values.join(","))
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}: {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::build_groups;

    #[test]
    fn single_community_is_perfectly_fair() {
        let ga = build_groups(&[0, 1, 1, 2, 0]).unwrap();
        let fr = fairness_ratio(&Partition::whole(5), &ga).unwrap();
        assert_eq!(fr.overall, 1.0);
        assert_eq!(awd(&Partition::whole(5), &ga).unwrap(), 0.0);
    }

    #[test]
    fn missing_group_zeroes_fairness_ratio() {
        let ga = build_groups(&[0, 0, 1, 1]).unwrap();
        let p = Partition::from_labels(&[0, 0, 0, 1]);
        let fr = fairness_ratio(&p, &ga).unwrap();
        assert!((fr.per_community[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(fr.per_community[1], 0.0);
        assert_eq!(fr.overall, 0.0);
    }

    #[test]
    fn awd_uneven_split() {
        let ga = build_groups(&[0, 0, 1, 1]).unwrap();
        let p = Partition::from_labels(&[0, 0, 0, 1]);
        assert!((awd(&p, &ga).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(awd(&Partition::from_labels(&[0, 1, 0, 1]), &ga).unwrap(), 0.0);
    }

    #[test]
    fn two_groups_wasserstein_is_first_coordinate_gap() {
        let sizes = [30, 70];
        let row = [9, 11];
        let wd = community_wasserstein(&row, &sizes, 100);
        assert!((wd - (9.0f64 / 20.0 - 0.3).abs()).abs() < 1e-15);
    }

    #[test]
    fn three_group_wasserstein_uses_cumulative_differences() {
        // p_u = (1, 0, 0), p = (1/3, 1/3, 1/3): |2/3| + |1/3| = 1
        let wd = community_wasserstein(&[1, 0, 0], &[1, 1, 1], 3);
        assert!((wd - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nmi_examples() {
        let truth = Partition::from_labels(&[0, 0, 1, 1]);
        assert!((nmi(&truth, &truth).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmi(&Partition::whole(4), &truth).unwrap(), 0.0);
        let swapped = Partition::from_labels(&[1, 1, 0, 0]);
        assert!((nmi(&swapped, &truth).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmi(&Partition::whole(4), &Partition::whole(4)).unwrap(), 1.0);
        assert!(nmi(&Partition::whole(3), &truth).is_err());
    }

    #[test]
    fn nmi_partial_agreement() {
        let truth = Partition::from_labels(&[0, 0, 0, 1, 1, 1]);
        let p = Partition::from_labels(&[0, 0, 1, 1, 1, 1]);
        let v = nmi(&p, &truth).unwrap();
        assert!(v > 0.0 && v < 1.0);
        assert!((v - nmi(&truth, &p).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn report_serialisation() {
        let g = crate::graph::load_edge_list("0 1\n2 3\n1 2\n").unwrap();
        let ga = build_groups(&[0, 1, 0, 1]).unwrap();
        let p = Partition::from_labels(&[0, 0, 1, 1]);
        let report = Report::evaluate(&g, &ga, &p, None).unwrap();
        assert_eq!(report.fr, 1.0);
        assert_eq!(report.awd, 0.0);
        assert_eq!(report.qp, 0.0);
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "fr,awd,q,qp,qp_x100,num_communities");
        assert!(report.to_text().contains("num_communities: 2"));
    }
}
