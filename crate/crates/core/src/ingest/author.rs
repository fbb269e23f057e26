use std::collections::BTreeSet;
use std::fmt;
use std::net::IpAddr;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name given to revisions whose contributor element is missing or suppressed.
/// It parses as an IP literal, so such revisions classify as anonymous.
pub const UNKNOWN_CONTRIBUTOR: &str = "0.0.0.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AuthorKind {
    Registered,
    Anonymous,
    Bot,
}

impl AuthorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AuthorKind::Registered => "registered",
            AuthorKind::Anonymous => "anonymous",
            AuthorKind::Bot => "bot",
        }
    }
}

impl fmt::Display for AuthorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuthorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "registered" => Ok(AuthorKind::Registered),
            "anonymous" => Ok(AuthorKind::Anonymous),
            "bot" => Ok(AuthorKind::Bot),
            other => Err(format!("unknown author kind `{other}`")),
        }
    }
}

/// How bot accounts are recognised. The classification is a pure function of
/// the username and this configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotConfig {
    /// Canonical usernames of known bots.
    #[serde(default)]
    pub names: BTreeSet<String>,
    /// Treat any username ending in "bot" (case-insensitive) as a bot.
    #[serde(default = "default_true")]
    pub suffix_heuristic: bool,
}

fn default_true() -> bool {
    true
}

impl Default for BotConfig {
    fn default() -> Self {
        BotConfig {
            names: BTreeSet::new(),
            suffix_heuristic: true,
        }
    }
}

impl BotConfig {
    pub fn with_names<I, S>(names: I, suffix_heuristic: bool) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        BotConfig {
            names: names
                .into_iter()
                .map(|n| canonical_username(n.as_ref()))
                .collect(),
            suffix_heuristic,
        }
    }

    /// Reads a bot list with one username per line; `#` starts a comment.
    pub fn load_list(path: &Path, suffix_heuristic: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let names = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        Ok(Self::with_names(names, suffix_heuristic))
    }

    pub fn is_bot(&self, canonical_name: &str) -> bool {
        if self.names.contains(canonical_name) {
            return true;
        }
        self.suffix_heuristic && canonical_name.to_lowercase().ends_with("bot")
    }
}

/// MediaWiki title normalisation for usernames: underscores become spaces,
/// surrounding whitespace is dropped and the first letter is upper-cased.
pub fn canonical_username(raw: &str) -> String {
    let spaced = raw.replace('_', " ");
    let trimmed = spaced.trim();
    let mut chars = trimmed.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn is_ip_literal(name: &str) -> bool {
    name.parse::<IpAddr>().is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AuthorId {
    pub name: String,
    pub kind: AuthorKind,
}

impl AuthorId {
    pub fn classify(raw_name: &str, bots: &BotConfig) -> Self {
        let name = canonical_username(raw_name);
        let kind = if name.is_empty() || is_ip_literal(&name) {
            AuthorKind::Anonymous
        } else if bots.is_bot(&name) {
            AuthorKind::Bot
        } else {
            AuthorKind::Registered
        };
        let name = if name.is_empty() {
            UNKNOWN_CONTRIBUTOR.to_string()
        } else {
            name
        };
        AuthorId { name, kind }
    }

    pub fn unknown() -> Self {
        AuthorId {
            name: UNKNOWN_CONTRIBUTOR.to_string(),
            kind: AuthorKind::Anonymous,
        }
    }

    pub fn is_anonymous(&self) -> bool {
        self.kind == AuthorKind::Anonymous
    }

    pub fn is_bot(&self) -> bool {
        self.kind == AuthorKind::Bot
    }
}

impl fmt::Display for AuthorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}
