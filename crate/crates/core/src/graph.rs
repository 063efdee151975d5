//! Sparse undirected weighted graphs and the directed graphs they are compared
//! against.
//!
//! A [`Graph`] stores each undirected edge once as `(i, j, w)` with `i < j`,
//! sorted by `(i, j)`. Observed graphs never carry self-loops. The one
//! exception is the output of [`symmetrize_directed`]: a directed self-loop of
//! weight `w` counts as half an undirected edge, so it is kept in a separate
//! `loops` list with weight `w / 2` and contributes `w` to the vertex degree.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};

/// Undirected weighted graph with dense vertex ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    loops: Vec<(usize, f64)>,
    degree: Vec<f64>,
    total_weight: f64,
}

impl Graph {
    /// Builds a graph from undirected edges in any orientation.
    ///
    /// Rejects self-loops, repeated pairs, endpoints `>= n`, and weights that
    /// are not positive and finite. The `line` of reported errors is the
    /// 1-based position of the offending edge in `edges`.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        let mut list = Vec::new();
        for (idx, (u, v, w)) in edges.into_iter().enumerate() {
            let line = idx + 1;
            check_edge(line, u, v, w, &mut seen)?;
            if u >= n || v >= n {
                return Err(invalid(format!(
                    "edge {u}-{v} references a vertex outside 0..{n}"
                )));
            }
            list.push((u.min(v), u.max(v), w));
        }
        Ok(Self::assemble(n, list, Vec::new()))
    }

    fn assemble(n: usize, mut edges: Vec<(usize, usize, f64)>, mut loops: Vec<(usize, f64)>) -> Self {
        edges.sort_by_key(|a| (a.0, a.1));
        loops.sort_by_key(|a| a.0);
        let mut degree = vec![0.0; n];
        for &(i, j, w) in &edges {
            degree[i] += w;
            degree[j] += w;
        }
        for &(i, w) in &loops {
            degree[i] += 2.0 * w;
        }
        let total_weight = crate::sum::sum(degree.iter().copied()) / 2.0;
        Graph {
            n,
            edges,
            loops,
            degree,
            total_weight,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges `(i, j, w)` with `i < j`, sorted by `(i, j)`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Half-edge self-loops `(i, w)`; empty for every observed graph.
    pub fn loops(&self) -> &[(usize, f64)] {
        &self.loops
    }

    /// Weighted degree `k_i`.
    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    /// Total edge weight `m = (Σ k_i) / 2`.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbour lists `(j, w)` for every vertex, loops excluded.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, w) in &self.edges {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        adj
    }

    /// Canonical edge-list text: one `u v [w]` line per edge, sorted by
    /// `(u, v)`, weight omitted when it equals 1.
    pub fn to_edge_list(&self) -> Result<String> {
        if !self.loops.is_empty() {
            return Err(invalid("self-loops cannot be written to an edge list"));
        }
        let mut out = String::with_capacity(self.edges.len() * 12);
        for &(i, j, w) in &self.edges {
            if w == 1.0 {
                let _ = writeln!(out, "{i} {j}");
            } else {
                let _ = writeln!(out, "{i} {j} {w}");
            }
        }
        Ok(out)
    }
}

fn check_edge(
    line: usize,
    u: usize,
    v: usize,
    w: f64,
    seen: &mut HashMap<(usize, usize), usize>,
) -> Result<()> {
    if u == v {
        return Err(Error::SelfLoop { line, vertex: u });
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::InvalidWeight { line, weight: w });
    }
    let key = (u.min(v), u.max(v));
    if let Some(&first) = seen.get(&key) {
        return Err(Error::DuplicateEdge {
            line,
            first,
            u: key.0,
            v: key.1,
        });
    }
    seen.insert(key, line);
    Ok(())
}

/// Parses edge-list text: `u v [w]` per line, `#` starts a comment.
///
/// The vertex count is `1 + max id`, and every id below it must appear on
/// some edge.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut seen = HashMap::new();
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() != 2 && tokens.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected `u v [w]`, found {} fields", tokens.len()),
            });
        }
        let parse_id = |tok: &str| {
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("`{tok}` is not a non-negative integer vertex id"),
            })
        };
        let u = parse_id(tokens[0])?;
        let v = parse_id(tokens[1])?;
        let w = match tokens.get(2) {
            Some(tok) => tok.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("`{tok}` is not a number"),
            })?,
            None => 1.0,
        };
        check_edge(line, u, v, w, &mut seen)?;
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u.min(v), u.max(v), w));
    }
    let n = max_id.map_or(0, |m| m + 1);
    let mut touched = vec![false; n];
    for &(u, v, _) in &edges {
        touched[u] = true;
        touched[v] = true;
    }
    if let Some(gap) = touched.iter().position(|t| !t) {
        return Err(Error::SparseVertexId(gap));
    }
    Ok(Graph::assemble(n, edges, Vec::new()))
}

/// Multiplies every edge weight by `c > 0`.
pub fn scale_weights(g: &Graph, c: f64) -> Result<Graph> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("scale factor must be positive, got {c}")));
    }
    let edges = g.edges.iter().map(|&(i, j, w)| (i, j, w * c)).collect();
    let loops = g.loops.iter().map(|&(i, w)| (i, w * c)).collect();
    Ok(Graph::assemble(g.n, edges, loops))
}

/// Re-indexes vertices: vertex `i` becomes `perm[i]`.
pub fn permute_vertices(g: &Graph, perm: &[usize]) -> Result<Graph> {
    check_permutation(perm, g.n)?;
    let edges = g
        .edges
        .iter()
        .map(|&(i, j, w)| {
            let (a, b) = (perm[i], perm[j]);
            (a.min(b), a.max(b), w)
        })
        .collect();
    let loops = g.loops.iter().map(|&(i, w)| (perm[i], w)).collect();
    Ok(Graph::assemble(g.n, edges, loops))
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: perm.len(),
        });
    }
    let mut hit = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut hit[p], true) {
            return Err(invalid("permutation is not a bijection"));
        }
    }
    Ok(())
}

/// Directed weighted graph; self-loops allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    n: usize,
    arcs: Vec<(usize, usize, f64)>,
    in_degree: Vec<f64>,
    out_degree: Vec<f64>,
    total_weight: f64,
}

impl DirectedGraph {
    /// Builds a digraph from arcs `(source, target, w)`; repeated arcs are
    /// rejected.
    pub fn from_arcs<I>(n: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        let mut list = Vec::new();
        let mut in_degree = vec![0.0; n];
        let mut out_degree = vec![0.0; n];
        for (idx, (u, v, w)) in arcs.into_iter().enumerate() {
            let line = idx + 1;
            if u >= n || v >= n {
                return Err(invalid(format!(
                    "arc {u}->{v} references a vertex outside 0..{n}"
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidWeight { line, weight: w });
            }
            if let Some(&first) = seen.get(&(u, v)) {
                return Err(Error::DuplicateEdge { line, first, u, v });
            }
            seen.insert((u, v), line);
            out_degree[u] += w;
            in_degree[v] += w;
            list.push((u, v, w));
        }
        list.sort_by_key(|a| (a.0, a.1));
        let total_weight = crate::sum::sum(in_degree.iter().copied());
        Ok(DirectedGraph {
            n,
            arcs: list,
            in_degree,
            out_degree,
            total_weight,
        })
    }

    /// Both orientations of every undirected edge.
    pub fn bidirected(g: &Graph) -> Self {
        let arcs = g
            .edges()
            .iter()
            .flat_map(|&(i, j, w)| [(i, j, w), (j, i, w)])
            .chain(g.loops().iter().map(|&(i, w)| (i, i, 2.0 * w)));
        Self::from_arcs(g.n(), arcs).expect("arcs of a valid graph are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[(usize, usize, f64)] {
        &self.arcs
    }

    pub fn in_degree(&self) -> &[f64] {
        &self.in_degree
    }

    pub fn out_degree(&self) -> &[f64] {
        &self.out_degree
    }

    /// Total arc weight `Σ k^in = Σ k^out`, the normaliser of directed
    /// modularity.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }
}

/// Collapses a symmetric digraph into the undirected graph with the same
/// modularity: each arc pair becomes one edge, each self-loop half an edge.
pub fn symmetrize_directed(dg: &DirectedGraph) -> Result<Graph> {
    let lookup: HashMap<(usize, usize), f64> =
        dg.arcs.iter().map(|&(u, v, w)| ((u, v), w)).collect();
    let mut edges = Vec::new();
    let mut loops = Vec::new();
    for &(u, v, w) in &dg.arcs {
        if u == v {
            loops.push((u, w / 2.0));
            continue;
        }
        match lookup.get(&(v, u)) {
            Some(&back) if back == w => {
                if u < v {
                    edges.push((u, v, w));
                }
            }
            Some(&back) => {
                return Err(invalid(format!(
                    "arc {u}->{v} has weight {w} but {v}->{u} has {back}"
                )))
            }
            None => return Err(invalid(format!("arc {u}->{v} has no reverse arc"))),
        }
    }
    Ok(Graph::assemble(dg.n, edges, loops))
}
