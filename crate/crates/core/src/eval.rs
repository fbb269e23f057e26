//! Ranking evaluation against editorial class labels.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{QualityClass, Ratings};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GainScheme {
    pub gains: BTreeMap<QualityClass, u32>,
}

impl Default for GainScheme {
    fn default() -> Self {
        use QualityClass::*;
        GainScheme {
            gains: [
                (FA, 6),
                (A, 5),
                (GA, 4),
                (B, 3),
                (C, 2),
                (Start, 1),
                (Stub, 0),
            ]
            .into(),
        }
    }
}

impl GainScheme {
    pub fn gain(&self, class: QualityClass) -> u32 {
        self.gains.get(&class).copied().unwrap_or(0)
    }

    /// Gains must not increase from better to worse classes.
    pub fn validate(&self) -> Result<()> {
        let ordered: Vec<u32> = QualityClass::ALL.iter().map(|&c| self.gain(c)).collect();
        if ordered.windows(2).all(|w| w[0] >= w[1]) {
            Ok(())
        } else {
            Err(Error::Config(
                "gains must be non-increasing from FA to Stub".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedPage {
    pub page_id: u64,
    pub score: f64,
    pub class: QualityClass,
}

/// Pages ordered by descending score, ties by ascending page id.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pages: Vec<RankedPage>,
}

impl Ranking {
    pub fn new(mut pages: Vec<RankedPage>) -> Self {
        pages.sort_by(|x, y| y.score.total_cmp(&x.score).then(x.page_id.cmp(&y.page_id)));
        Ranking { pages }
    }

    /// Ranks every labelled page; pages without a score rank as 0.
    pub fn from_scores(scores: &BTreeMap<u64, f64>, labels: &Ratings) -> Self {
        Self::filtered(scores, labels, |_| true)
    }

    pub fn filtered(
        scores: &BTreeMap<u64, f64>,
        labels: &Ratings,
        keep: impl Fn(QualityClass) -> bool,
    ) -> Self {
        Ranking::new(
            labels
                .iter()
                .filter(|(_, &c)| keep(c))
                .map(|(&page_id, &class)| RankedPage {
                    page_id,
                    score: scores.get(&page_id).copied().unwrap_or(0.0),
                    class,
                })
                .collect(),
        )
    }

    pub fn pages(&self) -> &[RankedPage] {
        &self.pages
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }
}

fn dcg(gains: impl Iterator<Item = u32>) -> f64 {
    gains
        .enumerate()
        .map(|(i, g)| (2f64.powi(g as i32) - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

/// Normalized discounted cumulative gain of the top `k` pages, with gain
/// `2^s - 1` and discount `log2(rank + 1)`.
pub fn ndcg(ranking: &Ranking, k: usize, gains: &GainScheme) -> Result<f64> {
    if k == 0 || k > ranking.len() {
        return Err(Error::Evaluation(format!(
            "cutoff {k} outside 1..={} for this corpus",
            ranking.len()
        )));
    }
    let actual: Vec<u32> = ranking.pages.iter().map(|p| gains.gain(p.class)).collect();
    let mut ideal = actual.clone();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let z = dcg(ideal.into_iter().take(k));
    if z == 0.0 {
        return Err(Error::Evaluation("no page has positive gain".into()));
    }
    Ok(dcg(actual.into_iter().take(k)) / z)
}

/// The class subsets reported in the filtered evaluation, in order.
pub fn table_filters() -> Vec<(&'static str, BTreeSet<QualityClass>)> {
    use QualityClass::*;
    vec![
        ("FA-C-Start-Stub", [FA, C, Start, Stub].into()),
        ("FA-C", [FA, C].into()),
        ("FA-Start-Stub", [FA, Start, Stub].into()),
        ("FA-Start", [FA, Start].into()),
        ("FA-Stub", [FA, Stub].into()),
    ]
}

/// NDCG over only the pages whose class is in `keep`. `k` defaults to the
/// size of the filtered corpus.
pub fn filtered_eval(
    scores: &BTreeMap<u64, f64>,
    labels: &Ratings,
    keep: &BTreeSet<QualityClass>,
    k: Option<usize>,
    gains: &GainScheme,
) -> Result<f64> {
    let ranking = Ranking::filtered(scores, labels, |c| keep.contains(&c));
    if ranking.is_empty() {
        return Err(Error::Evaluation(
            "no pages left after class filtering".into(),
        ));
    }
    ndcg(
        &ranking,
        k.unwrap_or(ranking.len()).min(ranking.len()),
        gains,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub cutoff: usize,
    pub recall: f64,
    pub precision: f64,
}

/// Precision and recall at every rank cutoff from 1 to N. Leading cutoffs
/// that hold no relevant page yet (recall 0) are omitted, so the curve
/// starts at the first relevant hit and ends at recall 1.
pub fn precision_recall(
    scores: &BTreeMap<u64, f64>,
    labels: &Ratings,
    relevant: &BTreeSet<QualityClass>,
) -> Result<Vec<PrPoint>> {
    let ranking = Ranking::from_scores(scores, labels);
    let total_relevant = ranking
        .pages
        .iter()
        .filter(|p| relevant.contains(&p.class))
        .count();
    if total_relevant == 0 || total_relevant == ranking.len() {
        return Err(Error::Evaluation(
            "precision-recall needs both relevant and irrelevant pages".into(),
        ));
    }
    let mut hits = 0usize;
    Ok(ranking
        .pages
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if relevant.contains(&p.class) {
                hits += 1;
            }
            PrPoint {
                cutoff: i + 1,
                recall: hits as f64 / total_relevant as f64,
                precision: hits as f64 / (i + 1) as f64,
            }
        })
        .filter(|p| p.recall > 0.0)
        .collect())
}

/// Share of each class falling in each equal-count score bucket; bucket 0
/// holds the highest scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercentileTable {
    pub buckets: usize,
    pub rows: BTreeMap<QualityClass, Vec<f64>>,
    pub bucket_sizes: Vec<usize>,
}

impl PercentileTable {
    pub fn proportion(&self, class: QualityClass, bucket: usize) -> f64 {
        self.rows.get(&class).map_or(0.0, |r| r[bucket])
    }

    pub fn write_tsv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "class\tbucket\tproportion")?;
        for (class, row) in &self.rows {
            for (b, p) in row.iter().enumerate() {
                writeln!(out, "{class}\t{}\t{p}", b + 1)?;
            }
        }
        Ok(())
    }
}

pub fn percentile_table(
    scores: &BTreeMap<u64, f64>,
    labels: &Ratings,
    buckets: usize,
) -> Result<PercentileTable> {
    if buckets < 2 {
        return Err(Error::Evaluation(format!(
            "need at least 2 buckets, got {buckets}"
        )));
    }
    let ranking = Ranking::from_scores(scores, labels);
    let n = ranking.len();
    let mut counts: BTreeMap<QualityClass, Vec<usize>> = BTreeMap::new();
    let mut sizes = vec![0usize; buckets];
    for (i, p) in ranking.pages.iter().enumerate() {
        let bucket = i * buckets / n;
        sizes[bucket] += 1;
        counts.entry(p.class).or_insert_with(|| vec![0; buckets])[bucket] += 1;
    }
    let rows = counts
        .into_iter()
        .map(|(class, row)| {
            let total: usize = row.iter().sum();
            (
                class,
                row.into_iter().map(|c| c as f64 / total as f64).collect(),
            )
        })
        .collect();
    Ok(PercentileTable {
        buckets,
        rows,
        bucket_sizes: sizes,
    })
}

pub fn write_pr_curve<W: Write>(out: &mut W, curve: &[PrPoint]) -> std::io::Result<()> {
    writeln!(out, "cutoff\trecall\tprecision")?;
    for p in curve {
        writeln!(out, "{}\t{}\t{}", p.cutoff, p.recall, p.precision)?;
    }
    Ok(())
}
