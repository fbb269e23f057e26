//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use wikiq_core::ingest::{AuthorId, BotConfig, Namespace, PageHistory, RevisionRecord};
use wikiq_core::network::{AuthorGraph, GraphKind};

pub fn author(name: &str) -> AuthorId {
    AuthorId::classify(name, &BotConfig::default())
}

/// A page from `(author, whitespace-separated text)` revisions.
pub fn page(id: u64, revs: &[(&str, &str)]) -> PageHistory {
    PageHistory {
        page_id: id,
        title: format!("Page {id}"),
        namespace: Namespace::Article,
        class_label: None,
        revisions: revs
            .iter()
            .enumerate()
            .map(|(i, (a, text))| RevisionRecord {
                page_id: id,
                rev_ordinal: i + 1,
                author: author(a),
                timestamp: 1_000_000 + i as i64 * 60,
                tokens: text.split_whitespace().map(str::to_string).collect(),
            })
            .collect(),
    }
}

pub fn node(i: usize) -> String {
    format!("N{i:03}")
}

/// Random graph on `n` nodes; every pair gets an edge with probability `p`
/// and a weight in `1..=max_w`.
pub fn random_graph(
    rng: &mut impl Rng,
    kind: GraphKind,
    n: usize,
    p: f64,
    max_w: u64,
) -> AuthorGraph {
    let mut g = AuthorGraph::new(kind);
    for i in 0..n {
        g.add_node(&author(&node(i)));
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || (!kind.directed() && j < i) {
                continue;
            }
            if rng.gen_bool(p) {
                g.add_edge(
                    &author(&node(i)),
                    &author(&node(j)),
                    rng.gen_range(1..=max_w),
                );
            }
        }
    }
    g
}

/// Dense index of a graph: names in sorted order and weighted adjacency,
/// with undirected edges mirrored.
pub fn dense(g: &AuthorGraph) -> (Vec<String>, Vec<Vec<f64>>) {
    let names: Vec<String> = g.node_names().map(str::to_string).collect();
    let idx: BTreeMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let n = names.len();
    let mut a = vec![vec![0.0; n]; n];
    for (s, d, w) in g.edges() {
        let (i, j) = (idx[s], idx[d]);
        a[i][j] += w as f64;
        if !g.directed() {
            a[j][i] += w as f64;
        }
    }
    (names, a)
}

/// BFS distances and shortest-path counts from `s` over unit-length arcs.
fn bfs(adj: &[Vec<f64>], s: usize) -> (Vec<Option<usize>>, Vec<f64>) {
    let n = adj.len();
    let mut dist = vec![None; n];
    let mut sigma = vec![0.0; n];
    dist[s] = Some(0);
    sigma[s] = 1.0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        for w in 0..n {
            if adj[v][w] == 0.0 {
                continue;
            }
            if dist[w].is_none() {
                dist[w] = Some(dist[v].unwrap() + 1);
                queue.push_back(w);
            }
            if dist[w] == Some(dist[v].unwrap() + 1) {
                sigma[w] += sigma[v];
            }
        }
    }
    (dist, sigma)
}

/// Betweenness from its definition: for every ordered pair (s, t) and every
/// intermediate v, v lies on a geodesic iff d(s,v) + d(v,t) = d(s,t), and
/// then carries sigma_sv * sigma_vt / sigma_st of the pair. Undirected
/// totals are halved.
pub fn brute_force_betweenness(g: &AuthorGraph) -> BTreeMap<String, f64> {
    let (names, adj) = dense(g);
    let n = names.len();
    let all: Vec<_> = (0..n).map(|s| bfs(&adj, s)).collect();
    let mut score = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let Some(dst) = all[s].0[t] else { continue };
            let sigma_st = all[s].1[t];
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                if let (Some(dsv), Some(dvt)) = (all[s].0[v], all[v].0[t]) {
                    if dsv + dvt == dst {
                        score[v] += all[s].1[v] * all[v].1[t] / sigma_st;
                    }
                }
            }
        }
    }
    let half = if g.directed() { 1.0 } else { 0.5 };
    names
        .into_iter()
        .zip(score)
        .map(|(k, v)| (k, v * half))
        .collect()
}

/// Solves `m x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x
}

/// PageRank as the solution of `(I - d P^T) x = (1 - d)/n * 1` where P is
/// the row-stochastic transition matrix with dangling rows replaced by the
/// uniform distribution.
pub fn pagerank_linear(g: &AuthorGraph, d: f64) -> BTreeMap<String, f64> {
    let (names, a) = dense(g);
    let n = names.len();
    let nf = n as f64;
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        let out: f64 = a[i].iter().sum();
        for j in 0..n {
            p[i][j] = if out == 0.0 { 1.0 / nf } else { a[i][j] / out };
        }
    }
    let m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { 0.0 } - d * p[j][i])
                .collect()
        })
        .collect();
    let x = solve(m, vec![(1.0 - d) / nf; n]);
    names.into_iter().zip(x).collect()
}

/// Symmetric matrix used for eigenvector centrality: A, or A + A^T for
/// directed graphs.
pub fn symmetrized(g: &AuthorGraph) -> (Vec<String>, Vec<Vec<f64>>) {
    let (names, a) = dense(g);
    if !g.directed() {
        return (names, a);
    }
    let n = a.len();
    let s = (0..n)
        .map(|i| (0..n).map(|j| a[i][j] + a[j][i]).collect())
        .collect();
    (names, s)
}

/// Eigenvalues and eigenvectors (columns) of a symmetric matrix by cyclic
/// Jacobi rotations.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// `max_i |(A x)_i - lambda x_i|` with lambda the Rayleigh quotient.
pub fn eigen_residual(a: &[Vec<f64>], x: &[f64]) -> (f64, f64) {
    let n = x.len();
    let ax: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| a[i][j] * x[j]).sum())
        .collect();
    let lambda =
        ax.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() / x.iter().map(|v| v * v).sum::<f64>();
    let res = (0..n)
        .map(|i| (ax[i] - lambda * x[i]).abs())
        .fold(0.0, f64::max);
    (res, lambda)
}

/// Two triangles {0,1,2} and {4,5,6} joined through node 3.
pub fn bridged_triangles(kind: GraphKind) -> AuthorGraph {
    let mut g = AuthorGraph::new(kind);
    for (a, b) in [
        (0, 1),
        (1, 2),
        (0, 2),
        (2, 3),
        (3, 4),
        (4, 5),
        (5, 6),
        (4, 6),
    ] {
        g.add_edge(&author(&node(a)), &author(&node(b)), 1);
    }
    g
}

/// A random history of at most `max_revs` revisions over a small
/// vocabulary, produced by random insertions, deletions, moves and reverts
/// from a handful of authors.
pub fn random_history(rng: &mut impl Rng, id: u64, max_revs: usize) -> PageHistory {
    let vocab: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let authors = ["Ann", "Bob", "Cid", "Dee", "10.0.0.7"];
    let n = rng.gen_range(1..=max_revs);
    let mut text: Vec<String> = Vec::new();
    let mut history: Vec<Vec<String>> = Vec::new();
    let mut revs = Vec::with_capacity(n);
    for i in 0..n {
        match rng.gen_range(0..5) {
            0 if !history.is_empty() => {
                text = history[rng.gen_range(0..history.len())].clone();
            }
            1 if !text.is_empty() => {
                let at = rng.gen_range(0..text.len());
                let len = rng.gen_range(1..=(text.len() - at).min(8));
                text.drain(at..at + len);
            }
            2 if text.len() > 2 => {
                let at = rng.gen_range(0..text.len());
                let len = rng.gen_range(1..=(text.len() - at));
                let chunk: Vec<String> = text.drain(at..at + len).collect();
                let to = rng.gen_range(0..=text.len());
                text.splice(to..to, chunk);
            }
            _ => {
                let at = rng.gen_range(0..=text.len());
                let len = rng.gen_range(1..10);
                let chunk: Vec<String> = (0..len)
                    .map(|_| vocab[rng.gen_range(0..vocab.len())].clone())
                    .collect();
                text.splice(at..at, chunk);
            }
        }
        history.push(text.clone());
        revs.push(RevisionRecord {
            page_id: id,
            rev_ordinal: i + 1,
            author: author(authors[rng.gen_range(0..authors.len())]),
            timestamp: 1_000_000 + i as i64,
            tokens: text.clone(),
        });
    }
    PageHistory {
        page_id: id,
        title: format!("Fuzz {id}"),
        namespace: Namespace::Article,
        class_label: None,
        revisions: revs,
    }
}
