mod common;

use std::collections::BTreeMap;
use std::io::{BufReader, Read};
use std::path::Path;

use proptest::prelude::*;
use regex::Regex;

use wikiq_core::ingest::{
    class_histogram, parse_dump, parse_ratings, tokenize, write_dump, AuthorKind, BotConfig,
    Contributor, DumpPage, DumpRevision, DumpWriter, QualityClass, RATINGS_HEADER,
};

fn regex_tokens(text: &str) -> Vec<String> {
    let re = Regex::new(r"\[\[|\]\]|\{\{|\}\}|[\p{Alphabetic}\p{N}]+|\S").unwrap();
    re.find_iter(text).map(|m| m.as_str().to_string()).collect()
}

proptest! {
    #[test]
    fn tokenizer_agrees_with_regex(text in r"[a-zA-Z0-9 \t\n,.:|=\[\]{}()'é日本ß²-]{0,120}") {
        prop_assert_eq!(tokenize(&text), regex_tokens(&text));
    }

    #[test]
    fn tokenizer_keeps_every_visible_character(text in "\\PC{0,80}") {
        let joined: String = tokenize(&text).concat();
        let visible: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        prop_assert_eq!(joined, visible);
    }
}

#[test]
fn tokenizer_agrees_with_regex_on_wikitext() {
    let text = "'''Stone Age''' is a [[prehistory|prehistoric]] period.{{cite web|url=x}} \
                [[User:Ann|Ann]] ([[User talk:Ann|talk]]) 10:02, 3 May 2011 (UTC)";
    assert_eq!(tokenize(text), regex_tokens(text));
}

fn fuzz_pages(n: u64) -> Vec<wikiq_core::ingest::PageHistory> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    (1..=n)
        .map(|id| common::random_history(&mut rng, id, 20))
        .collect()
}

#[test]
fn reparse_of_written_dump_is_identity() {
    let pages = fuzz_pages(25);
    let bytes = write_dump(Vec::new(), &pages).unwrap();
    let back: Vec<_> = parse_dump(BufReader::new(bytes.as_slice()), BotConfig::default())
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(back, pages);
}

#[test]
fn classification_is_deterministic() {
    let pages = fuzz_pages(5);
    let bytes = write_dump(Vec::new(), &pages).unwrap();
    let render = || {
        let mut out = Vec::new();
        for page in parse_dump(BufReader::new(bytes.as_slice()), BotConfig::default()) {
            wikiq_core::ingest::write_revision_rows(&mut out, &page.unwrap()).unwrap();
        }
        out
    };
    assert_eq!(render(), render());
}

#[test]
fn bots_from_list_and_suffix() {
    let bots = BotConfig::with_names(["Helper"], true);
    let page = DumpPage {
        id: 1,
        title: "X".into(),
        ns: 0,
        revisions: ["Helper", "SmackBot", "Abbot", "Bottom", "10.0.0.1"]
            .iter()
            .enumerate()
            .map(|(i, n)| DumpRevision {
                contributor: if n.starts_with("10.") {
                    Contributor::Ip(n.to_string())
                } else {
                    Contributor::User(n.to_string())
                },
                timestamp: i as i64,
                text: "x".into(),
            })
            .collect(),
    };
    let mut w = DumpWriter::new(Vec::new()).unwrap();
    w.write_page(&page).unwrap();
    let bytes = w.finish().unwrap();
    let parsed = parse_dump(BufReader::new(bytes.as_slice()), bots)
        .next()
        .unwrap()
        .unwrap();
    let kinds: Vec<AuthorKind> = parsed.revisions.iter().map(|r| r.author.kind).collect();
    assert_eq!(
        kinds,
        [
            AuthorKind::Bot,
            AuthorKind::Bot,
            AuthorKind::Bot,
            AuthorKind::Registered,
            AuthorKind::Anonymous
        ]
    );
}

/// Feeds the reader through a counting adapter so the test can see how far
/// into the stream the parser had read when it yielded each page.
struct Counting<R> {
    inner: R,
    read: std::rc::Rc<std::cell::Cell<usize>>,
}

impl<R: Read> Read for Counting<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.read.set(self.read.get() + n);
        Ok(n)
    }
}

#[test]
fn pages_stream_one_at_a_time() {
    let big = DumpPage {
        id: 1,
        title: "Big".into(),
        ns: 0,
        revisions: (0..10_000)
            .map(|i| DumpRevision {
                contributor: Contributor::User(format!("U{}", i % 7)),
                timestamp: i,
                text: format!("word{i} and some text"),
            })
            .collect(),
    };
    let small = DumpPage {
        id: 2,
        title: "Small".into(),
        ns: 0,
        revisions: vec![DumpRevision {
            contributor: Contributor::User("A".into()),
            timestamp: 0,
            text: "tail ".repeat(20_000),
        }],
    };
    let mut w = DumpWriter::new(Vec::new()).unwrap();
    w.write_page(&big).unwrap();
    let first_len = w.finish().unwrap().len();
    let mut w = DumpWriter::new(Vec::new()).unwrap();
    w.write_page(&big).unwrap();
    w.write_page(&small).unwrap();
    let bytes = w.finish().unwrap();

    let read = std::rc::Rc::new(std::cell::Cell::new(0));
    let source = BufReader::with_capacity(
        8192,
        Counting {
            inner: bytes.as_slice(),
            read: read.clone(),
        },
    );
    let mut pages = parse_dump(source, BotConfig::default());
    let first = pages.next().unwrap().unwrap();
    assert_eq!(first.revisions.len(), 10_000);
    // The second page (over 100 kB of text) has not been pulled in yet.
    assert!(
        read.get() < first_len + 8192,
        "read {} of {} bytes",
        read.get(),
        bytes.len()
    );
    let second = pages.next().unwrap().unwrap();
    assert_eq!(second.page_id, 2);
    assert!(pages.next().is_none());
}

#[test]
fn ratings_histogram_matches_line_count() {
    let classes = QualityClass::ALL;
    let mut text = format!("{RATINGS_HEADER}\n");
    let mut expected: BTreeMap<QualityClass, usize> = BTreeMap::new();
    for id in 0..9290u64 {
        let class = classes[(id * 7 + id / 3) as usize % classes.len()];
        *expected.entry(class).or_default() += 1;
        text.push_str(&format!("{id}\tPage {id}\t{class}\n"));
    }
    let ratings = parse_ratings(text.as_bytes(), Path::new("ratings.tsv")).unwrap();
    assert_eq!(ratings.len(), text.lines().count() - 1);
    assert_eq!(class_histogram(&ratings), expected);
}

#[test]
fn ratings_reject_unknown_class_with_row() {
    let text = format!("{RATINGS_HEADER}\n1\tA\tFA\n2\tB\tFL\n");
    let err = parse_ratings(text.as_bytes(), Path::new("r.tsv"))
        .unwrap_err()
        .to_string();
    assert!(err.contains("r.tsv:3"), "{err}");
    assert!(err.contains("FL"), "{err}");
}
