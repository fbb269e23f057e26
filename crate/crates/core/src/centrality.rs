//! Degree, betweenness, eigenvector and PageRank centrality over an
//! [`AuthorGraph`]. Nodes are processed in name order so every result is
//! deterministic.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{AuthorGraph, GraphKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Degree,
    Betweenness,
    Eigenvector,
    PageRank,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Degree,
        Metric::Betweenness,
        Metric::Eigenvector,
        Metric::PageRank,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Degree => "degree",
            Metric::Betweenness => "betweenness",
            Metric::Eigenvector => "eigenvector",
            Metric::PageRank => "pagerank",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenParams {
    fn default() -> Self {
        EigenParams {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CentralityParams {
    #[serde(default)]
    pub eigen: EigenParams,
    #[serde(default)]
    pub pagerank: PageRankParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityTable {
    pub metric: Metric,
    pub graph_kind: GraphKind,
    /// `key=value` pairs recorded in the file header.
    pub params: String,
    pub scores: BTreeMap<String, f64>,
}

impl CentralityTable {
    pub fn get(&self, author: &str) -> Option<f64> {
        self.scores.get(author).copied()
    }

    /// Rows sorted by descending score, then author.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut rows: Vec<(&str, f64)> =
            self.scores.iter().map(|(a, &s)| (a.as_str(), s)).collect();
        rows.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(y.0)));
        rows
    }

    pub fn write_tsv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "# metric={} graph={} {}",
            self.metric, self.graph_kind, self.params
        )?;
        for (author, score) in self.ranked() {
            writeln!(out, "{author}\t{score:e}")?;
        }
        Ok(())
    }
}

/// Dense index view of a graph.
struct Indexed<'g> {
    names: Vec<&'g str>,
    /// Outgoing `(target, weight)`, or both directions for undirected graphs.
    out: Vec<Vec<(usize, f64)>>,
    /// Incoming neighbours for directed graphs; mirrors `out` otherwise.
    inc: Vec<Vec<(usize, f64)>>,
}

impl<'g> Indexed<'g> {
    fn new(g: &'g AuthorGraph) -> Self {
        let names: Vec<&str> = g.node_names().collect();
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut out = vec![Vec::new(); names.len()];
        let mut inc = vec![Vec::new(); names.len()];
        for (s, d, w) in g.edges() {
            let (s, d, w) = (index[s], index[d], w as f64);
            out[s].push((d, w));
            inc[d].push((s, w));
            if !g.directed() {
                out[d].push((s, w));
                inc[s].push((d, w));
            }
        }
        for list in out.iter_mut().chain(inc.iter_mut()) {
            list.sort_by_key(|&(n, _)| n);
        }
        Indexed { names, out, inc }
    }

    fn len(&self) -> usize {
        self.names.len()
    }

    fn table(
        &self,
        metric: Metric,
        g: &AuthorGraph,
        params: String,
        scores: Vec<f64>,
    ) -> CentralityTable {
        CentralityTable {
            metric,
            graph_kind: g.kind(),
            params,
            scores: self
                .names
                .iter()
                .zip(scores)
                .map(|(n, s)| (n.to_string(), s))
                .collect(),
        }
    }
}

/// Number of distinct neighbours; for directed graphs in-degree plus
/// out-degree. Weights are ignored.
pub fn degree(g: &AuthorGraph) -> CentralityTable {
    let ix = Indexed::new(g);
    let scores = (0..ix.len())
        .map(|i| {
            if g.directed() {
                (ix.out[i].len() + ix.inc[i].len()) as f64
            } else {
                ix.out[i].len() as f64
            }
        })
        .collect();
    ix.table(Metric::Degree, g, String::new(), scores)
}

/// Shortest-path betweenness over hop counts (Brandes accumulation). For
/// undirected graphs each unordered pair is counted once.
pub fn betweenness(g: &AuthorGraph) -> CentralityTable {
    let ix = Indexed::new(g);
    let n = ix.len();
    let mut cb = vec![0.0f64; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut stack = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for s in 0..n {
        for v in 0..n {
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
            preds[v].clear();
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &(w, _) in &ix.out[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    if !g.directed() {
        for c in &mut cb {
            *c /= 2.0;
        }
    }
    ix.table(Metric::Betweenness, g, String::new(), cb)
}

/// Symmetric weighted adjacency as neighbour lists; directed graphs use
/// `A + A^T`.
fn symmetric_adjacency(ix: &Indexed<'_>, directed: bool) -> Vec<Vec<(usize, f64)>> {
    if !directed {
        return ix.out.clone();
    }
    (0..ix.len())
        .map(|i| {
            let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
            for &(j, w) in ix.out[i].iter().chain(&ix.inc[i]) {
                *merged.entry(j).or_insert(0.0) += w;
            }
            merged.into_iter().collect()
        })
        .collect()
}

/// Dominant eigenvector of the (symmetrized) weighted adjacency, scaled to
/// unit max-norm.
///
/// Iterates `x <- (A + I) x / ||(A + I) x||_inf` from the all-ones vector.
/// The identity shift leaves the eigenvectors unchanged and keeps the
/// iteration from oscillating on bipartite graphs.
pub fn eigenvector(g: &AuthorGraph, params: EigenParams) -> Result<CentralityTable> {
    let ix = Indexed::new(g);
    let n = ix.len();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let label = format!("tol={:e} max_iter={}", params.tol, params.max_iter);
    if g.edge_count() == 0 {
        warn!("eigenvector centrality on a graph without edges; all scores are zero");
        return Ok(ix.table(Metric::Eigenvector, g, label, vec![0.0; n]));
    }
    let adj = symmetric_adjacency(&ix, g.directed());
    let mut x = vec![1.0f64; n];
    let mut next = vec![0.0f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iter {
        for i in 0..n {
            next[i] = x[i] + adj[i].iter().map(|&(j, w)| w * x[j]).sum::<f64>();
        }
        let norm = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in &mut next {
            *v /= norm;
        }
        residual = x
            .iter()
            .zip(&next)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut x, &mut next);
        if residual < params.tol {
            return Ok(ix.table(Metric::Eigenvector, g, label, x));
        }
    }
    Err(Error::NotConverged {
        metric: "eigenvector",
        iterations: params.max_iter,
        residual,
    })
}

/// Damped PageRank on the weighted graph (undirected edges count in both
/// directions). Dangling mass and teleportation are spread uniformly.
pub fn pagerank(g: &AuthorGraph, params: PageRankParams) -> Result<CentralityTable> {
    let ix = Indexed::new(g);
    let n = ix.len();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let out_weight: Vec<f64> = ix
        .out
        .iter()
        .map(|l| l.iter().map(|&(_, w)| w).sum())
        .collect();
    let d = params.damping;
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iter {
        let dangling: f64 = (0..n).filter(|&i| out_weight[i] == 0.0).map(|i| x[i]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        for (slot, inc) in next.iter_mut().zip(&ix.inc) {
            *slot = base
                + d * inc
                    .iter()
                    .map(|&(j, w)| x[j] * w / out_weight[j])
                    .sum::<f64>();
        }
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual < params.tol {
            let label = format!(
                "damping={} tol={:e} max_iter={}",
                d, params.tol, params.max_iter
            );
            return Ok(ix.table(Metric::PageRank, g, label, x));
        }
    }
    Err(Error::NotConverged {
        metric: "pagerank",
        iterations: params.max_iter,
        residual,
    })
}

pub fn compute(
    metric: Metric,
    g: &AuthorGraph,
    params: CentralityParams,
) -> Result<CentralityTable> {
    match metric {
        Metric::Degree => Ok(degree(g)),
        Metric::Betweenness => Ok(betweenness(g)),
        Metric::Eigenvector => eigenvector(g, params.eigen),
        Metric::PageRank => pagerank(g, params.pagerank),
    }
}
