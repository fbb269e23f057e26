//! Edit quality, edit longevity, per-author contribution and main-author
//! selection.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::diff::{edit_distance, triangle_guard};
use crate::error::{Error, Result};
use crate::ingest::{AuthorId, AuthorKind, PageHistory};

/// Number of later revisions by other authors used to judge an edit.
pub const JUDGE_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevisionJudgment {
    pub rev_ordinal: usize,
    /// Size of the edit, `d(v_{i-1}, v_i)`.
    pub edit_size: f64,
    /// Mean clamped edit quality over the judges, in `[-1, 1]`.
    pub alpha_bar: f64,
    pub longevity: f64,
    pub judge_count: usize,
}

impl RevisionJudgment {
    /// No later revision by another author exists, so the edit is unjudged
    /// and carries zero longevity.
    pub fn unjudged(&self) -> bool {
        self.judge_count == 0
    }
}

/// Interns a page's tokens and memoizes pairwise version distances.
pub struct PageDistances<'a> {
    page: &'a PageHistory,
    versions: Vec<Vec<u32>>,
    cache: HashMap<(usize, usize), f64>,
}

impl<'a> PageDistances<'a> {
    pub fn new(page: &'a PageHistory) -> Self {
        let mut ids: HashMap<&str, u32> = HashMap::new();
        let mut versions = Vec::with_capacity(page.revisions.len() + 1);
        versions.push(Vec::new());
        for rev in &page.revisions {
            let v = rev
                .tokens
                .iter()
                .map(|t| {
                    let next = ids.len() as u32;
                    *ids.entry(t.as_str()).or_insert(next)
                })
                .collect();
            versions.push(v);
        }
        PageDistances {
            page,
            versions,
            cache: HashMap::new(),
        }
    }

    /// `d(v_i, v_j)`; symmetric, so cached under the ordered pair.
    pub fn distance(&mut self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        if let Some(&d) = self.cache.get(&key) {
            return d;
        }
        let d = edit_distance(&self.versions[key.0], &self.versions[key.1]).distance;
        self.cache.insert(key, d);
        d
    }

    pub fn page(&self) -> &'a PageHistory {
        self.page
    }
}

/// Edit quality of revision `i` as judged by version `j`, with the
/// distances passed through the triangle guard and the result clamped to
/// `[-1, 1]`.
pub fn edit_quality(dist: &mut PageDistances<'_>, i: usize, j: usize) -> Result<f64> {
    let edit = dist.distance(i - 1, i);
    if edit == 0.0 {
        return Ok(0.0);
    }
    let before_to_judge = dist.distance(i - 1, j);
    let after_to_judge = dist.distance(i, j);
    let before_to_judge = triangle_guard(edit, after_to_judge, before_to_judge)?;
    let after_to_judge = triangle_guard(edit, before_to_judge, after_to_judge)?;
    let alpha = (before_to_judge - after_to_judge) / edit;
    Ok(alpha.clamp(-1.0, 1.0))
}

/// Revisions after `i` whose author differs from the author of `i`,
/// at most [`JUDGE_WINDOW`] of them.
pub fn judges(page: &PageHistory, i: usize) -> Vec<usize> {
    let author = &page.revisions[i - 1].author;
    page.revisions[i..]
        .iter()
        .filter(|r| &r.author != author)
        .take(JUDGE_WINDOW)
        .map(|r| r.rev_ordinal)
        .collect()
}

pub fn judge_revision(page: &PageHistory, i: usize) -> Result<RevisionJudgment> {
    let mut dist = PageDistances::new(page);
    judge_with(&mut dist, i)
}

pub fn judge_with(dist: &mut PageDistances<'_>, i: usize) -> Result<RevisionJudgment> {
    let page = dist.page();
    if i == 0 || i > page.revisions.len() {
        return Err(Error::RevisionOutOfRange {
            ordinal: i,
            len: page.revisions.len(),
        });
    }
    let edit_size = dist.distance(i - 1, i);
    let judge_set = judges(page, i);
    let alpha_bar = if judge_set.is_empty() || edit_size == 0.0 {
        0.0
    } else {
        let mut total = 0.0;
        for &j in &judge_set {
            total += edit_quality(dist, i, j)?;
        }
        (total / judge_set.len() as f64).clamp(-1.0, 1.0)
    };
    Ok(RevisionJudgment {
        rev_ordinal: i,
        edit_size,
        alpha_bar,
        longevity: alpha_bar * edit_size,
        judge_count: judge_set.len(),
    })
}

pub fn judge_page(page: &PageHistory) -> Result<Vec<RevisionJudgment>> {
    let mut dist = PageDistances::new(page);
    (1..=page.revisions.len())
        .map(|i| judge_with(&mut dist, i))
        .collect()
}

/// Per-page summary used to spot revert wars and unjudged tails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageDiagnostics {
    pub page_id: u64,
    pub revisions: usize,
    pub unjudged: usize,
    pub negative: usize,
    /// Largest single positive longevity divided by the page's total
    /// positive longevity (0 when there is none).
    pub max_revision_share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContributionOptions {
    pub exclude_bots: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ContributionTable {
    /// page id -> author -> summed positive longevity
    entries: BTreeMap<u64, BTreeMap<AuthorId, f64>>,
}

impl ContributionTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a page so it is present even with no contributors.
    pub fn touch_page(&mut self, page_id: u64) {
        self.entries.entry(page_id).or_default();
    }

    /// Adds one revision's longevity; only positive values count.
    pub fn add(&mut self, page_id: u64, author: &AuthorId, longevity: f64) {
        let slot = self
            .entries
            .entry(page_id)
            .or_default()
            .entry(author.clone())
            .or_insert(0.0);
        if longevity > 0.0 {
            *slot += longevity;
        }
    }

    pub fn insert(&mut self, page_id: u64, author: AuthorId, contrib: f64) {
        self.entries
            .entry(page_id)
            .or_default()
            .insert(author, contrib);
    }

    pub fn get(&self, page_id: u64, author: &AuthorId) -> Option<f64> {
        self.entries.get(&page_id)?.get(author).copied()
    }

    pub fn page(&self, page_id: u64) -> Option<&BTreeMap<AuthorId, f64>> {
        self.entries.get(&page_id)
    }

    pub fn pages(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &AuthorId, f64)> + '_ {
        self.entries
            .iter()
            .flat_map(|(&p, authors)| authors.iter().map(move |(a, &c)| (p, a, c)))
    }

    /// Sums per key; associative and commutative.
    pub fn merge(&mut self, other: ContributionTable) {
        for (page, authors) in other.entries {
            let dst = self.entries.entry(page).or_default();
            for (author, c) in authors {
                *dst.entry(author).or_insert(0.0) += c;
            }
        }
    }

    /// Rows sorted by page id, then descending contribution, then author.
    pub fn sorted_rows(&self) -> Vec<(u64, &AuthorId, f64)> {
        let mut rows = Vec::new();
        for (&page, authors) in &self.entries {
            let mut ranked: Vec<(&AuthorId, f64)> = authors.iter().map(|(a, &c)| (a, c)).collect();
            ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.name.cmp(&y.0.name)));
            rows.extend(ranked.into_iter().map(|(a, c)| (page, a, c)));
        }
        rows
    }
}

fn counts_as_contributor(author: &AuthorId, opts: ContributionOptions) -> bool {
    match author.kind {
        AuthorKind::Registered => true,
        AuthorKind::Anonymous => false,
        AuthorKind::Bot => !opts.exclude_bots,
    }
}

/// Contribution of every registered author to one page, plus diagnostics.
pub fn page_contributions(
    page: &PageHistory,
    opts: ContributionOptions,
) -> Result<(ContributionTable, PageDiagnostics)> {
    let judgments = judge_page(page)?;
    let mut table = ContributionTable::new();
    table.touch_page(page.page_id);
    let mut positive_total = 0.0;
    let mut positive_max: f64 = 0.0;
    for (rev, j) in page.revisions.iter().zip(&judgments) {
        if j.longevity > 0.0 {
            positive_total += j.longevity;
            positive_max = positive_max.max(j.longevity);
        }
        if counts_as_contributor(&rev.author, opts) {
            table.add(page.page_id, &rev.author, j.longevity);
        }
    }
    let diag = PageDiagnostics {
        page_id: page.page_id,
        revisions: judgments.len(),
        unjudged: judgments.iter().filter(|j| j.unjudged()).count(),
        negative: judgments.iter().filter(|j| j.longevity < 0.0).count(),
        max_revision_share: if positive_total > 0.0 {
            positive_max / positive_total
        } else {
            0.0
        },
    };
    Ok((table, diag))
}

pub fn build_contributions<I>(histories: I, opts: ContributionOptions) -> Result<ContributionTable>
where
    I: IntoIterator<Item = PageHistory>,
{
    let mut table = ContributionTable::new();
    for page in histories {
        let (part, _) = page_contributions(&page, opts)?;
        table.merge(part);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    /// Minimum contribution for an author to count toward the threshold.
    pub min_contrib: f64,
    /// Minimum number of authors selected when enough have contributed.
    pub min_authors: usize,
    /// Fraction of total contribution the selected authors must exceed.
    pub theta: f64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams {
            min_contrib: 10.0,
            min_authors: 20,
            theta: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuthorSelection {
    pub page_id: u64,
    /// Selected authors with their contribution, descending.
    pub authors: Vec<(AuthorId, f64)>,
    pub params: SelectionParams,
}

impl AuthorSelection {
    pub fn contains(&self, author: &AuthorId) -> bool {
        self.authors.iter().any(|(a, _)| a == author)
    }
}

/// Picks the main contributors of a page.
///
/// Authors are ranked by descending contribution (ties by name). Authors
/// above `min_contrib` are taken in order until their cumulative share of
/// the page total exceeds `theta`. If fewer than `min_authors` were taken,
/// the next authors with positive contribution fill up to that floor.
pub fn select_authors(
    table: &ContributionTable,
    page_id: u64,
    params: SelectionParams,
) -> Result<AuthorSelection> {
    let authors = table.page(page_id).ok_or(Error::UnknownPage(page_id))?;
    let mut ranked: Vec<(&AuthorId, f64)> = authors.iter().map(|(a, &c)| (a, c)).collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.name.cmp(&y.0.name)));
    let total: f64 = ranked.iter().map(|(_, c)| c).sum();
    let mut selected = Vec::new();
    if total > 0.0 {
        let mut cumulative = 0.0;
        for &(author, c) in &ranked {
            if c <= params.min_contrib || cumulative / total > params.theta {
                break;
            }
            cumulative += c;
            selected.push((author.clone(), c));
        }
        let floor = params
            .min_authors
            .min(ranked.iter().filter(|(_, c)| *c > 0.0).count());
        for &(author, c) in ranked.iter().skip(selected.len()) {
            if selected.len() >= floor {
                break;
            }
            selected.push((author.clone(), c));
        }
    }
    Ok(AuthorSelection {
        page_id,
        authors: selected,
        params,
    })
}

pub fn select_all(table: &ContributionTable, params: SelectionParams) -> Vec<AuthorSelection> {
    table
        .pages()
        .map(|p| select_authors(table, p, params).expect("page listed by table"))
        .collect()
}
