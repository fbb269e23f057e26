//! Article quality scores from author contributions and author centrality.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use serde::{Serialize, Serializer};

use crate::centrality::{CentralityTable, Metric};
use crate::longevity::{AuthorSelection, ContributionTable, SelectionParams};
use crate::network::GraphKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Model {
    /// Sum of selected authors' contributions.
    Longevity,
    /// Sum of selected authors' centrality.
    Centrality(Metric),
    /// Sum of normalized contribution times normalized centrality.
    Combined(Metric),
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Longevity => f.write_str("longevity"),
            Model::Centrality(m) => write!(f, "cen-{m}"),
            Model::Combined(m) => write!(f, "com-{m}"),
        }
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "longevity" {
            return Ok(Model::Longevity);
        }
        if let Some(m) = s.strip_prefix("cen-") {
            return m.parse().map(Model::Centrality);
        }
        if let Some(m) = s.strip_prefix("com-") {
            return m.parse().map(Model::Combined);
        }
        Err(format!("unknown model `{s}`"))
    }
}

impl Serialize for Model {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Bounds> {
        values.into_iter().fold(None, |acc, v| {
            Some(match acc {
                None => Bounds { min: v, max: v },
                Some(b) => Bounds {
                    min: b.min.min(v),
                    max: b.max.max(v),
                },
            })
        })
    }

    /// Min-max normalization; a degenerate range maps everything to 0.5.
    pub fn normalize(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.5
        }
    }

    fn degenerate(&self) -> bool {
        self.max <= self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub selection: Option<SelectionParams>,
    pub graph_kind: Option<GraphKind>,
    pub contrib_bounds: Option<Bounds>,
    pub centrality_bounds: Option<Bounds>,
}

impl Provenance {
    fn new(selections: &[AuthorSelection]) -> Self {
        Provenance {
            selection: selections.first().map(|s| s.params),
            graph_kind: None,
            contrib_bounds: None,
            centrality_bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityScoreTable {
    pub model: Model,
    pub scores: BTreeMap<u64, f64>,
    pub provenance: Provenance,
}

pub fn longevity_qscore(
    selections: &[AuthorSelection],
    contributions: &ContributionTable,
) -> QualityScoreTable {
    let scores = selections
        .iter()
        .map(|sel| {
            let total = sel
                .authors
                .iter()
                .map(|(a, _)| contributions.get(sel.page_id, a).unwrap_or(0.0))
                .sum();
            (sel.page_id, total)
        })
        .collect();
    QualityScoreTable {
        model: Model::Longevity,
        scores,
        provenance: Provenance::new(selections),
    }
}

pub fn centrality_qscore(
    selections: &[AuthorSelection],
    cent: &CentralityTable,
) -> QualityScoreTable {
    let mut missing = 0usize;
    let scores = selections
        .iter()
        .map(|sel| {
            let total = sel
                .authors
                .iter()
                .map(|(a, _)| {
                    cent.get(&a.name).unwrap_or_else(|| {
                        missing += 1;
                        0.0
                    })
                })
                .sum();
            (sel.page_id, total)
        })
        .collect();
    if missing > 0 {
        debug!(
            "{missing} selected authors absent from the {} network",
            cent.graph_kind
        );
    }
    let mut provenance = Provenance::new(selections);
    provenance.graph_kind = Some(cent.graph_kind);
    QualityScoreTable {
        model: Model::Centrality(cent.metric),
        scores,
        provenance,
    }
}

/// Contribution and centrality are each min-max normalized over the whole
/// corpus (all selected author-page pairs, all network nodes) before being
/// multiplied. Selected authors missing from the network get normalized
/// centrality 0.
pub fn combined_qscore(
    selections: &[AuthorSelection],
    contributions: &ContributionTable,
    cent: &CentralityTable,
) -> QualityScoreTable {
    let contrib_of = |sel: &AuthorSelection, a| contributions.get(sel.page_id, a).unwrap_or(0.0);
    let contrib_bounds = Bounds::of(
        selections
            .iter()
            .flat_map(|sel| sel.authors.iter().map(move |(a, _)| contrib_of(sel, a))),
    );
    let cent_bounds = Bounds::of(cent.scores.values().copied());
    for (what, b) in [
        ("contribution", contrib_bounds),
        ("centrality", cent_bounds),
    ] {
        if b.is_some_and(|b| b.degenerate()) {
            warn!("all {what} values are equal; normalizing them to 0.5");
        }
    }
    let scores = selections
        .iter()
        .map(|sel| {
            let total = sel
                .authors
                .iter()
                .map(|(a, _)| {
                    let c = contrib_bounds.map_or(0.0, |b| b.normalize(contrib_of(sel, a)));
                    let x = match (cent.get(&a.name), cent_bounds) {
                        (Some(v), Some(b)) => b.normalize(v),
                        _ => 0.0,
                    };
                    c * x
                })
                .sum();
            (sel.page_id, total)
        })
        .collect();
    let mut provenance = Provenance::new(selections);
    provenance.graph_kind = Some(cent.graph_kind);
    provenance.contrib_bounds = contrib_bounds;
    provenance.centrality_bounds = cent_bounds;
    QualityScoreTable {
        model: Model::Combined(cent.metric),
        scores,
        provenance,
    }
}
