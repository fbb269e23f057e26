//! Author networks: co-authorship from main contributors, and two directed
//! talk networks built from user talk pages.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{tokenize, AuthorId, AuthorKind, BotConfig, Namespace, PageHistory};
use crate::longevity::AuthorSelection;

/// Maximum distance in tokens between a user link and the timestamp that
/// closes a signature.
pub const SIGNATURE_WINDOW: usize = 40;

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Coauthor,
    #[serde(rename = "talk-sig")]
    TalkSignature,
    #[serde(rename = "talk-hist")]
    TalkHistory,
}

impl GraphKind {
    pub const ALL: [GraphKind; 3] = [
        GraphKind::Coauthor,
        GraphKind::TalkSignature,
        GraphKind::TalkHistory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Coauthor => "coauthor",
            GraphKind::TalkSignature => "talk-sig",
            GraphKind::TalkHistory => "talk-hist",
        }
    }

    pub fn directed(self) -> bool {
        !matches!(self, GraphKind::Coauthor)
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GraphKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                format!("unknown network `{s}` (expected coauthor, talk-sig or talk-hist)")
            })
    }
}

/// Weighted author graph. Undirected edges are stored once, with the
/// lexicographically smaller name first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorGraph {
    kind: GraphKind,
    nodes: BTreeMap<String, AuthorKind>,
    edges: BTreeMap<(String, String), u64>,
}

impl AuthorGraph {
    pub fn new(kind: GraphKind) -> Self {
        AuthorGraph {
            kind,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn directed(&self) -> bool {
        self.kind.directed()
    }

    pub fn add_node(&mut self, author: &AuthorId) {
        self.nodes.entry(author.name.clone()).or_insert(author.kind);
    }

    /// Adds `weight` to the edge `src -> dst`. Self-loops are ignored.
    pub fn add_edge(&mut self, src: &AuthorId, dst: &AuthorId, weight: u64) {
        if src.name == dst.name || weight == 0 {
            return;
        }
        self.add_node(src);
        self.add_node(dst);
        let key = if self.directed() || src.name < dst.name {
            (src.name.clone(), dst.name.clone())
        } else {
            (dst.name.clone(), src.name.clone())
        };
        *self.edges.entry(key).or_insert(0) += weight;
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.nodes.contains_key(name)
    }

    pub fn nodes(&self) -> impl Iterator<Item = AuthorId> + '_ {
        self.nodes.iter().map(|(name, &kind)| AuthorId {
            name: name.clone(),
            kind,
        })
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> + '_ {
        self.nodes.keys().map(String::as_str)
    }

    /// Edges in storage order: `(src, dst, weight)`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> + '_ {
        self.edges
            .iter()
            .map(|((s, d), &w)| (s.as_str(), d.as_str(), w))
    }

    /// Weight of `a -> b`; for undirected graphs the order does not matter.
    pub fn weight(&self, a: &str, b: &str) -> u64 {
        let key = if self.directed() || a < b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        self.edges.get(&key).copied().unwrap_or(0)
    }

    /// Sums edge weights and unions nodes.
    pub fn merge(&mut self, other: &AuthorGraph) {
        for (name, &kind) in &other.nodes {
            self.nodes.entry(name.clone()).or_insert(kind);
        }
        for (key, &w) in &other.edges {
            *self.edges.entry(key.clone()).or_insert(0) += w;
        }
    }

    pub fn write_edge_list<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# kind={} directed={}", self.kind, self.directed())?;
        for (s, d, w) in self.edges() {
            writeln!(out, "{s}\t{d}\t{w}")?;
        }
        Ok(())
    }

    pub fn write_node_list<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "author\tkind")?;
        for (name, kind) in &self.nodes {
            writeln!(out, "{name}\t{kind}")?;
        }
        Ok(())
    }

    /// Reads a graph written by [`write_node_list`](Self::write_node_list)
    /// and [`write_edge_list`](Self::write_edge_list).
    pub fn read(
        nodes: impl BufRead,
        nodes_path: &Path,
        edges: impl BufRead,
        edges_path: &Path,
    ) -> Result<AuthorGraph> {
        let mut edge_lines = edges.lines();
        let header = match edge_lines.next() {
            Some(line) => line.map_err(|e| Error::io(edges_path, e))?,
            None => return Err(Error::table(edges_path, 1, "missing header")),
        };
        let kind = header
            .strip_prefix("# kind=")
            .and_then(|rest| rest.split_whitespace().next())
            .ok_or_else(|| Error::table(edges_path, 1, format!("bad header `{header}`")))?
            .parse::<GraphKind>()
            .map_err(|e| Error::table(edges_path, 1, e))?;
        let mut graph = AuthorGraph::new(kind);
        for (idx, line) in nodes.lines().enumerate().skip(1) {
            let line = line.map_err(|e| Error::io(nodes_path, e))?;
            let Some((name, kind)) = line.split_once('\t') else {
                return Err(Error::table(
                    nodes_path,
                    idx + 1,
                    "expected author<TAB>kind",
                ));
            };
            let kind: AuthorKind = kind
                .parse()
                .map_err(|e: String| Error::table(nodes_path, idx + 1, e))?;
            graph.nodes.insert(name.to_string(), kind);
        }
        for (idx, line) in edge_lines.enumerate() {
            let lineno = idx + 2;
            let line = line.map_err(|e| Error::io(edges_path, e))?;
            let fields: Vec<&str> = line.split('\t').collect();
            let [s, d, w] = fields[..] else {
                return Err(Error::table(
                    edges_path,
                    lineno,
                    "expected src<TAB>dst<TAB>weight",
                ));
            };
            let w: u64 = w
                .parse()
                .map_err(|_| Error::table(edges_path, lineno, format!("bad weight `{w}`")))?;
            for n in [s, d] {
                if !graph.nodes.contains_key(n) {
                    return Err(Error::table(
                        edges_path,
                        lineno,
                        format!("edge endpoint `{n}` not in node list"),
                    ));
                }
            }
            graph.edges.insert((s.to_string(), d.to_string()), w);
        }
        Ok(graph)
    }
}

/// Co-author network: one clique per page over its selected authors, edge
/// weight = number of shared pages.
pub fn build_coauthor<'a, I>(selections: I) -> AuthorGraph
where
    I: IntoIterator<Item = &'a AuthorSelection>,
{
    let mut graph = AuthorGraph::new(GraphKind::Coauthor);
    for sel in selections {
        for (i, (a, _)) in sel.authors.iter().enumerate() {
            graph.add_node(a);
            for (b, _) in &sel.authors[i + 1..] {
                graph.add_edge(a, b, 1);
            }
        }
    }
    graph
}

/// Owner of a user talk page from its title, e.g. `User talk:Bob/Archive 2`
/// belongs to `Bob`.
pub fn talk_page_owner(title: &str) -> Option<&str> {
    let rest = title.strip_prefix("User talk:")?;
    let owner = rest.split('/').next()?.trim();
    (!owner.is_empty()).then_some(owner)
}

fn owner_of(page: &PageHistory, bots: &BotConfig) -> Option<AuthorId> {
    if page.namespace != Namespace::UserTalk {
        warn!(
            "page {} (`{}`) is not a user talk page; skipped",
            page.page_id, page.title
        );
        return None;
    }
    match talk_page_owner(&page.title) {
        Some(owner) => Some(AuthorId::classify(owner, bots)),
        None => {
            warn!("cannot derive owner from title `{}`; skipped", page.title);
            None
        }
    }
}

/// Key under which a username is compared with a name recovered from
/// tokenized text.
pub fn signature_key(name: &str) -> String {
    tokenize(&name.replace('_', " ")).join(" ")
}

/// Maps tokenized signature names back to known usernames.
#[derive(Debug, Clone, Default)]
pub struct NameIndex {
    by_key: HashMap<String, String>,
}

impl NameIndex {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut by_key = HashMap::new();
        for name in names {
            let name = name.as_ref();
            by_key
                .entry(signature_key(name))
                .or_insert_with(|| name.to_string());
        }
        NameIndex { by_key }
    }

    pub fn resolve(&self, key: &str) -> String {
        self.by_key
            .get(key)
            .cloned()
            .unwrap_or_else(|| key.to_string())
    }
}

fn is_digits(tok: &str, min: usize, max: usize) -> bool {
    (min..=max).contains(&tok.len()) && tok.bytes().all(|b| b.is_ascii_digit())
}

/// Matches `HH:MM, D Month YYYY (UTC)` starting at `i`; returns its length.
fn timestamp_at(tokens: &[String], i: usize) -> Option<usize> {
    let t = tokens.get(i..i + 10)?;
    let ok = is_digits(&t[0], 1, 2)
        && t[1] == ":"
        && is_digits(&t[2], 2, 2)
        && t[3] == ","
        && is_digits(&t[4], 1, 2)
        && MONTHS.contains(&t[5].as_str())
        && is_digits(&t[6], 4, 4)
        && t[7] == "("
        && t[8] == "UTC"
        && t[9] == ")";
    ok.then_some(10)
}

/// Matches `[[User:Name` or `[[User talk:Name` at `i`; returns the name key
/// and the index just past the name.
fn user_link_at(tokens: &[String], i: usize) -> Option<(String, usize)> {
    if tokens.get(i)? != "[[" || !tokens.get(i + 1)?.eq_ignore_ascii_case("user") {
        return None;
    }
    let mut k = i + 2;
    if tokens.get(k)?.eq_ignore_ascii_case("talk") {
        k += 1;
    }
    if tokens.get(k)? != ":" {
        return None;
    }
    k += 1;
    let start = k;
    while let Some(tok) = tokens.get(k) {
        if matches!(tok.as_str(), "|" | "]]" | "/" | "#" | "[[") {
            break;
        }
        k += 1;
    }
    let name: Vec<&str> = tokens[start..k]
        .iter()
        .map(String::as_str)
        .filter(|t| *t != "_")
        .collect();
    (!name.is_empty()).then(|| (name.join(" "), k))
}

/// Signers of every signature in a token stream, in order of appearance.
/// A signature is a user or user-talk link followed within
/// [`SIGNATURE_WINDOW`] tokens by a default-format UTC timestamp; each link
/// signs at most one timestamp.
pub fn find_signatures(tokens: &[String]) -> Vec<String> {
    let mut signers = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    let mut i = 0;
    while i < tokens.len() {
        if let Some((key, end)) = user_link_at(tokens, i) {
            pending = Some((i, key));
            i = end;
            continue;
        }
        if let Some(len) = timestamp_at(tokens, i) {
            if let Some((pos, key)) = pending.take() {
                if i - pos <= SIGNATURE_WINDOW {
                    signers.push(key);
                }
            }
            i += len;
            continue;
        }
        i += 1;
    }
    signers
}

/// Talk network from signatures on the latest version of each user talk
/// page: one `signer -> owner` unit per signature.
pub fn build_talk_signature<'a, I>(utp_pages: I, bots: &BotConfig, names: &NameIndex) -> AuthorGraph
where
    I: IntoIterator<Item = &'a PageHistory>,
{
    let mut graph = AuthorGraph::new(GraphKind::TalkSignature);
    for page in utp_pages {
        let Some(owner) = owner_of(page, bots) else {
            continue;
        };
        if owner.is_anonymous() {
            continue;
        }
        let Some(latest) = page.latest() else {
            continue;
        };
        for key in find_signatures(&latest.tokens) {
            let signer = AuthorId::classify(&names.resolve(&key), bots);
            if !signer.is_anonymous() {
                graph.add_edge(&signer, &owner, 1);
            }
        }
    }
    graph
}

/// Talk network from the full edit history of user talk pages: one
/// `editor -> owner` unit per revision by a registered user other than the
/// owner.
pub fn build_talk_history<'a, I>(utp_histories: I, bots: &BotConfig) -> AuthorGraph
where
    I: IntoIterator<Item = &'a PageHistory>,
{
    let mut graph = AuthorGraph::new(GraphKind::TalkHistory);
    for page in utp_histories {
        let Some(owner) = owner_of(page, bots) else {
            continue;
        };
        if owner.is_anonymous() {
            continue;
        }
        for rev in &page.revisions {
            if !rev.author.is_anonymous() {
                graph.add_edge(&rev.author, &owner, 1);
            }
        }
    }
    graph
}

/// Induced subgraph on `project_authors`, optionally without bots.
pub fn restrict_and_filter(
    g: &AuthorGraph,
    project_authors: &BTreeSet<String>,
    drop_bots: bool,
) -> AuthorGraph {
    let keep = |name: &str, kind: AuthorKind| {
        project_authors.contains(name) && !(drop_bots && kind == AuthorKind::Bot)
    };
    let mut out = AuthorGraph::new(g.kind);
    for (name, &kind) in &g.nodes {
        if keep(name, kind) {
            out.nodes.insert(name.clone(), kind);
        }
    }
    for ((s, d), &w) in &g.edges {
        if out.nodes.contains_key(s) && out.nodes.contains_key(d) {
            out.edges.insert((s.clone(), d.clone()), w);
        }
    }
    out
}
