//! Deterministic synthetic corpora with a planted quality signal.
//!
//! Better-rated articles get more revisions, more distinct authors, a larger
//! share of "core" authors and larger surviving edits. Core authors also
//! talk to each other much more on their user talk pages, so they end up
//! central in the talk networks. A configurable number of Start-class pages
//! are generated with featured-article activity to act as anomalies.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    Contributor, DumpPage, DumpRevision, DumpWriter, QualityClass, RATINGS_HEADER, USER_TALK_NS,
};

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ra", "te", "su", "no", "vi", "de", "pa", "ri", "to", "ze", "qua", "bel",
    "dor", "an", "is", "um", "gor", "fen", "hal", "mar", "tus",
];
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
/// 2010-01-01T00:00:00Z
const EPOCH: i64 = 1_262_304_000;
const UTP_ID_BASE: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub pages_per_class: BTreeMap<QualityClass, usize>,
    /// Mean number of distinct registered authors per page.
    pub authors_per_class: BTreeMap<QualityClass, usize>,
    /// Inclusive range of revision counts per page.
    pub revisions_per_class: BTreeMap<QualityClass, (usize, usize)>,
    /// Probability that a revision is anonymous vandalism reverted by the
    /// next revision.
    pub revert_probability: f64,
    /// Probability that a registered revision triggers a talk message to a
    /// co-author.
    pub talk_message_rate: f64,
    /// Probability that a talk message carries no signature.
    pub unsigned_rate: f64,
    /// Probability that a revision is a small bot edit.
    pub bot_rate: f64,
    pub core_authors: usize,
    pub casual_authors: usize,
    /// Range of the share of a page's authors drawn from the core pool.
    pub core_share: (f64, f64),
    /// Range of the per-page multiplier on casual edit sizes.
    pub casual_verbosity: (f64, f64),
    /// Start-class pages generated with A-class activity.
    pub anomalous_start_pages: usize,
    /// C-class pages generated with featured-article activity.
    pub overlapping_c_pages: usize,
    /// C-class pages with featured-article activity whose extra text comes
    /// from verbose casual authors, so they overlap in volume only.
    pub padded_c_pages: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        use QualityClass::*;
        SynthSpec {
            pages_per_class: [(FA, 5), (GA, 10), (C, 15), (Start, 20), (Stub, 25)].into(),
            authors_per_class: [
                (FA, 10),
                (A, 10),
                (GA, 9),
                (B, 9),
                (C, 8),
                (Start, 7),
                (Stub, 6),
            ]
            .into(),
            revisions_per_class: [
                (FA, (45, 70)),
                (A, (40, 60)),
                (GA, (30, 50)),
                (B, (22, 40)),
                (C, (14, 30)),
                (Start, (6, 14)),
                (Stub, (2, 6)),
            ]
            .into(),
            revert_probability: 0.05,
            talk_message_rate: 0.3,
            unsigned_rate: 0.2,
            bot_rate: 0.03,
            core_authors: 30,
            casual_authors: 150,
            core_share: (0.25, 0.6),
            casual_verbosity: (0.3, 2.0),
            anomalous_start_pages: 1,
            overlapping_c_pages: 2,
            padded_c_pages: 3,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1], got {p}")))
            }
        };
        prob("revert_probability", self.revert_probability)?;
        prob("talk_message_rate", self.talk_message_rate)?;
        prob("unsigned_rate", self.unsigned_rate)?;
        prob("bot_rate", self.bot_rate)?;
        for (name, (lo, hi)) in [
            ("core_share", self.core_share),
            ("casual_verbosity", self.casual_verbosity),
        ] {
            if !(lo > 0.0 && lo < hi) {
                return Err(Error::Config(format!(
                    "{name} must be a range (lo, hi) with 0 < lo < hi"
                )));
            }
        }
        if self.core_share.1 > 1.0 {
            return Err(Error::Config("core_share cannot exceed 1".into()));
        }
        if self.core_authors < 2 || self.casual_authors < 2 {
            return Err(Error::Config(
                "need at least 2 core and 2 casual authors".into(),
            ));
        }
        for (class, &(lo, hi)) in &self.revisions_per_class {
            if lo == 0 || lo > hi {
                return Err(Error::Config(format!(
                    "bad revision range for {class}: ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    fn quality(class: QualityClass) -> f64 {
        match class {
            QualityClass::FA => 1.0,
            QualityClass::A => 0.9,
            QualityClass::GA => 0.8,
            QualityClass::B => 0.65,
            QualityClass::C => 0.5,
            QualityClass::Start => 0.35,
            QualityClass::Stub => 0.2,
        }
    }
}

/// A generated dump and its ratings table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCorpus {
    pub dump: Vec<u8>,
    pub ratings: String,
    /// Ids of the Start pages generated with featured-article activity.
    pub anomalous: Vec<u64>,
}

impl SynthCorpus {
    pub fn write_to(&self, dump_path: &Path, ratings_path: &Path) -> Result<()> {
        std::fs::write(dump_path, &self.dump).map_err(|e| Error::io(dump_path, e))?;
        std::fs::write(ratings_path, &self.ratings).map_err(|e| Error::io(ratings_path, e))
    }
}

/// How a page is generated: revision count and author pool follow
/// `activity`, core edit sizes follow `edits`, and `verbose` pages get
/// casual edits from the top of the verbosity range.
#[derive(Debug, Clone, Copy)]
struct Profile {
    activity: QualityClass,
    edits: QualityClass,
    verbose: bool,
}

impl Profile {
    fn of(class: QualityClass) -> Self {
        Profile {
            activity: class,
            edits: class,
            verbose: false,
        }
    }
}

struct Message {
    sender: String,
    owner: String,
    timestamp: i64,
    signed: bool,
}

struct Generator {
    rng: ChaCha8Rng,
    vocabulary: Vec<String>,
    core: Vec<String>,
    casual: Vec<String>,
    bots: Vec<String>,
    clock: i64,
}

impl Generator {
    fn new(spec: &SynthSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut vocabulary = std::collections::BTreeSet::new();
        while vocabulary.len() < 4000 {
            let n = rng.gen_range(2..=4);
            let w: String = (0..n)
                .map(|_| *SYLLABLES.choose(&mut rng).unwrap())
                .collect();
            vocabulary.insert(w);
        }
        let mut vocabulary: Vec<String> = vocabulary.into_iter().collect();
        vocabulary.shuffle(&mut rng);
        let core = (0..spec.core_authors)
            .map(|i| format!("Scholar{i:03}"))
            .collect();
        let casual = (0..spec.casual_authors)
            .map(|i| format!("Reader{i:03}"))
            .collect();
        let bots = ["TidyBot", "LinkFixBot", "CiteBot"]
            .map(String::from)
            .to_vec();
        Generator {
            rng,
            vocabulary,
            core,
            casual,
            bots,
            clock: EPOCH,
        }
    }

    fn tick(&mut self) -> i64 {
        self.clock += self.rng.gen_range(60..86_400);
        self.clock
    }

    fn words(&mut self, n: usize) -> Vec<String> {
        (0..n)
            .map(|i| {
                if i > 0 && self.rng.gen_bool(0.08) {
                    if self.rng.gen_bool(0.5) { "," } else { "." }.to_string()
                } else {
                    self.vocabulary[self.rng.gen_range(0..self.vocabulary.len())].clone()
                }
            })
            .collect()
    }

    fn words_between(&mut self, lo: usize, hi: usize) -> Vec<String> {
        let n = self.rng.gen_range(lo..hi);
        self.words(n)
    }

    fn ip(&mut self) -> String {
        format!(
            "10.{}.{}.{}",
            self.rng.gen_range(0..=255),
            self.rng.gen_range(0..=255),
            self.rng.gen_range(1..=254)
        )
    }

    fn title(&mut self) -> String {
        let w = self.words(2);
        let cap = |s: &str| {
            let mut c = s.chars();
            c.next()
                .map(|f| f.to_uppercase().chain(c).collect::<String>())
                .unwrap_or_default()
        };
        format!("{} {}", cap(&w[0]), cap(&w[1]).replace([',', '.'], "Era"))
    }

    /// Distinct registered authors for one page, core authors first. The
    /// core share is drawn independently of the page's class.
    fn page_authors(&mut self, mean: usize, share: (f64, f64)) -> (Vec<String>, usize) {
        let lo = (mean * 7 / 10).max(2);
        let hi = (mean * 13 / 10).max(lo);
        let n = self.rng.gen_range(lo..=hi);
        let share = self.rng.gen_range(share.0..share.1);
        let n_core = (((n as f64) * share).round() as usize).clamp(1, self.core.len());
        let n_casual = n.saturating_sub(n_core).min(self.casual.len());
        let mut authors: Vec<String> = self
            .core
            .choose_multiple(&mut self.rng, n_core)
            .cloned()
            .collect();
        authors.extend(
            self.casual
                .choose_multiple(&mut self.rng, n_casual)
                .cloned(),
        );
        (authors, n_core)
    }

    fn article(
        &mut self,
        spec: &SynthSpec,
        id: u64,
        profile: Profile,
        messages: &mut Vec<Message>,
    ) -> DumpPage {
        let quality = SynthSpec::quality(profile.edits);
        let mean_authors = spec
            .authors_per_class
            .get(&profile.activity)
            .copied()
            .unwrap_or(5);
        let (lo, hi) = spec
            .revisions_per_class
            .get(&profile.activity)
            .copied()
            .unwrap_or((3, 8));
        let (authors, n_core) = self.page_authors(mean_authors, spec.core_share);
        let n_revisions = self.rng.gen_range(lo..=hi);
        // Casual verbosity is class-independent noise in text volume; only
        // core authors' edit size follows the page's quality.
        let (vlo, vhi) = spec.casual_verbosity;
        let verbosity = if profile.verbose {
            self.rng.gen_range(vhi..2.0 * vhi)
        } else {
            self.rng.gen_range(vlo..vhi)
        };
        let weights: Vec<f64> = (0..authors.len())
            .map(|i| if i < n_core { 2.0 } else { 1.0 })
            .collect();

        let mut text: Vec<String> = Vec::new();
        let mut revisions = Vec::with_capacity(n_revisions + 2);
        let push =
            |revisions: &mut Vec<DumpRevision>, who: Contributor, ts: i64, text: &[String]| {
                revisions.push(DumpRevision {
                    contributor: who,
                    timestamp: ts,
                    text: text.join(" "),
                });
            };
        let mut first = true;
        while revisions.len() < n_revisions {
            let ts = self.tick();
            if !first
                && self.rng.gen_bool(spec.revert_probability)
                && revisions.len() + 2 <= n_revisions
            {
                let before = text.clone();
                let junk = self.words_between(5, 20);
                let at = self.rng.gen_range(0..=text.len());
                text.splice(at..at, junk);
                let ip = self.ip();
                push(&mut revisions, Contributor::Ip(ip), ts, &text);
                text = before;
                let fixer = authors[self.pick(&weights)].clone();
                let ts = self.tick();
                push(&mut revisions, Contributor::User(fixer), ts, &text);
                continue;
            }
            if !first && self.rng.gen_bool(spec.bot_rate) {
                let bot = self.bots.choose(&mut self.rng).unwrap().clone();
                let tag = self.words(1).remove(0);
                text.extend(["[[", "Category", ":", tag.as_str(), "]]"].map(String::from));
                push(&mut revisions, Contributor::User(bot), ts, &text);
                continue;
            }
            let who = self.pick(&weights);
            let is_core = who < n_core;
            let size = if is_core {
                self.rng.gen_range(10.0..30.0) * quality
            } else {
                self.rng.gen_range(2.0..10.0) * verbosity
            };
            let size = size.round().max(1.0) as usize;
            let chunk = self.words(size);
            let at = if text.is_empty() {
                0
            } else {
                self.rng.gen_range(0..=text.len())
            };
            text.splice(at..at, chunk);
            push(
                &mut revisions,
                Contributor::User(authors[who].clone()),
                ts,
                &text,
            );
            first = false;

            // Frequent co-authors (the core ones) discuss the page; casual
            // authors only ever write to them.
            if n_core > 1 && self.rng.gen_bool(spec.talk_message_rate) {
                let mut to = self.rng.gen_range(0..n_core);
                while to == who {
                    to = self.rng.gen_range(0..n_core);
                }
                let signed = !self.rng.gen_bool(spec.unsigned_rate);
                messages.push(Message {
                    sender: authors[who].clone(),
                    owner: authors[to].clone(),
                    timestamp: ts + 60,
                    signed,
                });
            }
        }
        DumpPage {
            id,
            title: self.title(),
            ns: 0,
            revisions,
        }
    }

    fn pick(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut x = self.rng.gen_range(0.0..total);
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        weights.len() - 1
    }

    /// Project-wide chatter among core authors, independent of any one
    /// article. Each round every core author writes to the author `shift`
    /// places ahead, so all of them receive the same volume.
    fn project_chatter(&mut self, spec: &SynthSpec, messages: &mut Vec<Message>) {
        let n = self.core.len();
        let rounds = (spec.talk_message_rate * 100.0).round() as usize;
        for round in 0..rounds {
            let shift = 1 + round % (n - 1);
            for i in 0..n {
                let ts = self.tick();
                let signed = !self.rng.gen_bool(spec.unsigned_rate);
                messages.push(Message {
                    sender: self.core[i].clone(),
                    owner: self.core[(i + shift) % n].clone(),
                    timestamp: ts,
                    signed,
                });
            }
        }
    }

    fn signature(&self, user: &str, ts: i64) -> String {
        let t = chrono::DateTime::from_timestamp(ts, 0).expect("timestamp in range");
        use chrono::{Datelike, Timelike};
        format!(
            "[[User:{user}|{user}]] ([[User talk:{user}|talk]]) {:02}:{:02}, {} {} {} (UTC)",
            t.hour(),
            t.minute(),
            t.day(),
            MONTHS[t.month0() as usize],
            t.year()
        )
    }

    fn talk_pages(&mut self, mut messages: Vec<Message>) -> Vec<DumpPage> {
        messages.sort_by(|a, b| a.owner.cmp(&b.owner).then(a.timestamp.cmp(&b.timestamp)));
        let mut by_owner: BTreeMap<String, Vec<Message>> = BTreeMap::new();
        for m in messages {
            by_owner.entry(m.owner.clone()).or_default().push(m);
        }
        let mut pages = Vec::new();
        for (i, (owner, msgs)) in by_owner.into_iter().enumerate() {
            let mut text = String::new();
            let mut revisions = Vec::new();
            for m in msgs {
                let body = self.words_between(6, 20).join(" ");
                text.push_str(&format!("\n== {} ==\n{body} ", self.words(1)[0]));
                if m.signed {
                    text.push_str(&self.signature(&m.sender, m.timestamp));
                }
                revisions.push(DumpRevision {
                    contributor: Contributor::User(m.sender.clone()),
                    timestamp: m.timestamp,
                    text: text.clone(),
                });
                if self.rng.gen_bool(0.3) {
                    let reply = self.words_between(3, 10).join(" ");
                    text.push_str(&format!(
                        "\n: {reply} {}",
                        self.signature(&owner, m.timestamp + 120)
                    ));
                    revisions.push(DumpRevision {
                        contributor: Contributor::User(owner.clone()),
                        timestamp: m.timestamp + 120,
                        text: text.clone(),
                    });
                }
            }
            // keep timestamps non-decreasing within the page
            revisions.sort_by_key(|r| r.timestamp);
            pages.push(DumpPage {
                id: UTP_ID_BASE + i as u64,
                title: format!("User talk:{owner}"),
                ns: USER_TALK_NS,
                revisions,
            });
        }
        pages
    }
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut gen = Generator::new(spec);
    let mut messages = Vec::new();
    let mut articles = Vec::new();
    let mut ratings = format!("{RATINGS_HEADER}\n");
    let mut anomalous = Vec::new();
    let mut next_id = 1u64;
    for (&class, &count) in &spec.pages_per_class {
        for k in 0..count {
            let profile = match class {
                QualityClass::Start if k < spec.anomalous_start_pages => {
                    anomalous.push(next_id);
                    Profile {
                        activity: QualityClass::FA,
                        edits: QualityClass::A,
                        verbose: false,
                    }
                }
                QualityClass::C if k < spec.overlapping_c_pages => Profile::of(QualityClass::FA),
                // long articles padded out by peripheral authors
                QualityClass::C if k < spec.overlapping_c_pages + spec.padded_c_pages => Profile {
                    activity: QualityClass::FA,
                    edits: QualityClass::C,
                    verbose: true,
                },
                _ => Profile::of(class),
            };
            let page = gen.article(spec, next_id, profile, &mut messages);
            ratings.push_str(&format!("{}\t{}\t{}\n", page.id, page.title, class));
            articles.push(page);
            next_id += 1;
        }
    }
    gen.project_chatter(spec, &mut messages);
    let talk = gen.talk_pages(messages);

    let mut writer = DumpWriter::new(Vec::new()).map_err(|e| Error::io("<memory>", e))?;
    for page in articles.iter().chain(&talk) {
        writer
            .write_page(page)
            .map_err(|e| Error::io("<memory>", e))?;
    }
    let dump = writer.finish().map_err(|e| Error::io("<memory>", e))?;
    Ok(SynthCorpus {
        dump,
        ratings,
        anomalous,
    })
}
