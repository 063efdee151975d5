//! Text file formats: groups files, partition CSVs, merge-trace CSVs and
//! feature tables.

use std::fmt::Write as _;

use crate::agglomerate::MergeTrace;
use crate::error::{invalid, Error, Result};
use crate::groups::{build_groups, GroupAssignment, Partition};

pub const TRACE_HEADER: &str =
    "step,merged_a,merged_b,delta_q,delta_qp,q,qp,num_communities,fr,awd,alpha_threshold";

pub const PARTITION_HEADER: &str = "vertex_id,community_id";

/// Formats a float with 12 significant digits, `%g` style: fixed notation
/// for moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Groups file: one integer label per line, line `i` for vertex `i`.
///
/// Labels already dense in `0..r` keep their order; anything else is
/// relabelled in first-appearance order.
pub fn read_groups(text: &str) -> Result<GroupAssignment> {
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let label = content.parse::<i64>().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("`{content}` is not an integer group label"),
        })?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(invalid("groups file has no labels"));
    }
    let max = *labels.iter().max().expect("nonempty");
    let dense = labels.iter().all(|&l| l >= 0) && {
        let r = max as usize + 1;
        let mut seen = vec![false; r];
        for &l in &labels {
            seen[l as usize] = true;
        }
        seen.iter().all(|&s| s)
    };
    if dense {
        GroupAssignment::from_dense(labels.iter().map(|&l| l as usize).collect(), max as usize + 1)
    } else {
        build_groups(&labels)
    }
}

pub fn write_groups(ga: &GroupAssignment) -> String {
    let mut out = String::with_capacity(ga.n() * 2);
    for g in ga.group_of() {
        let _ = writeln!(out, "{g}");
    }
    out
}

/// Partition CSV with header `vertex_id,community_id`; every vertex in
/// `0..n` must appear exactly once.
pub fn read_partition(text: &str) -> Result<Partition> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (vcol, ccol) = (column("vertex_id")?, column("community_id")?);
    let mut pairs = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |col: usize, name: &str| {
            let value = record.get(col).unwrap_or("");
            value.parse::<usize>().map_err(|_| Error::NonNumeric {
                row: row + 1,
                column: name.to_string(),
                value: value.to_string(),
            })
        };
        pairs.push((parse(vcol, "vertex_id")?, parse(ccol, "community_id")?));
    }
    let n = pairs.len();
    let mut labels = vec![None; n];
    for (v, c) in pairs {
        match labels.get_mut(v) {
            Some(slot @ None) => *slot = Some(c),
            Some(Some(_)) => return Err(invalid(format!("vertex {v} listed twice"))),
            None => return Err(invalid(format!("vertex {v} outside 0..{n}"))),
        }
    }
    let labels: Vec<usize> = labels.into_iter().map(|l| l.expect("all filled")).collect();
    Ok(Partition::from_labels(&labels))
}

pub fn write_partition(p: &Partition) -> String {
    let mut out = String::with_capacity(p.n() * 8 + 24);
    out.push_str(PARTITION_HEADER);
    out.push('\n');
    for (v, c) in p.community_of().iter().enumerate() {
        let _ = writeln!(out, "{v},{c}");
    }
    out
}

/// One CSV row per merge.
pub fn write_trace(trace: &MergeTrace) -> String {
    let mut out = String::with_capacity(trace.records.len() * 120 + 100);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.merged_a,
            r.merged_b,
            fmt_float(r.delta_q),
            fmt_float(r.delta_qp),
            fmt_float(r.q),
            fmt_float(r.qp),
            r.num_communities,
            fmt_float(r.fr),
            fmt_float(r.awd),
            fmt_float(r.alpha_threshold),
        );
    }
    out
}
