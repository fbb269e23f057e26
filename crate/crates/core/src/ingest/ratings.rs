use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Editorial quality grade, best first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QualityClass {
    FA,
    A,
    GA,
    B,
    C,
    Start,
    Stub,
}

impl QualityClass {
    pub const ALL: [QualityClass; 7] = [
        QualityClass::FA,
        QualityClass::A,
        QualityClass::GA,
        QualityClass::B,
        QualityClass::C,
        QualityClass::Start,
        QualityClass::Stub,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QualityClass::FA => "FA",
            QualityClass::A => "A",
            QualityClass::GA => "GA",
            QualityClass::B => "B",
            QualityClass::C => "C",
            QualityClass::Start => "Start",
            QualityClass::Stub => "Stub",
        }
    }
}

impl fmt::Display for QualityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QualityClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QualityClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown quality class `{s}`"))
    }
}

pub type Ratings = BTreeMap<u64, QualityClass>;

pub const RATINGS_HEADER: &str = "page_id\ttitle\tclass";

/// Parses a `page_id<TAB>title<TAB>class` table. `origin` is only used in
/// error messages.
pub fn parse_ratings<R: BufRead>(reader: R, origin: &Path) -> Result<Ratings> {
    let mut ratings = Ratings::new();
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(header)) if header.trim_end_matches('\r') == RATINGS_HEADER => {}
        Some(Ok(header)) => {
            return Err(Error::table(origin, 1, format!("bad header `{header}`")));
        }
        Some(Err(e)) => return Err(Error::io(origin, e)),
        None => return Err(Error::table(origin, 1, "empty ratings file")),
    }
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, _title, class] = fields[..] else {
            return Err(Error::table(
                origin,
                lineno,
                "expected 3 tab-separated fields",
            ));
        };
        let id: u64 = id
            .parse()
            .map_err(|_| Error::table(origin, lineno, format!("bad page id `{id}`")))?;
        let class: QualityClass = class
            .parse()
            .map_err(|e: String| Error::table(origin, lineno, e))?;
        if ratings.insert(id, class).is_some() {
            return Err(Error::table(
                origin,
                lineno,
                format!("duplicate page id {id}"),
            ));
        }
    }
    Ok(ratings)
}

pub fn load_ratings(path: &Path) -> Result<Ratings> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ratings(std::io::BufReader::new(file), path)
}

pub fn class_histogram(ratings: &Ratings) -> BTreeMap<QualityClass, usize> {
    let mut hist = BTreeMap::new();
    for class in ratings.values() {
        *hist.entry(*class).or_insert(0) += 1;
    }
    hist
}
