//! Streaming reader and writer for MediaWiki XML export dumps.
//!
//! The reader yields one [`PageHistory`] per `<page>` element and holds at
//! most one page's revisions in memory. Only the elements needed downstream
//! are interpreted: page `title`, `ns`, `id`, and for each revision its
//! `timestamp`, `contributor` (`username` or `ip`) and `text`.

use std::io::{BufRead, Write};

use chrono::DateTime;
use log::warn;
use quick_xml::escape::{escape, resolve_predefined_entity};
use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::author::{AuthorId, BotConfig};
use super::ratings::QualityClass;
use super::tokenize::tokenize;
use crate::error::{Error, Result};

pub const USER_TALK_NS: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Namespace {
    Article,
    UserTalk,
    Other(i32),
}

impl Namespace {
    pub fn from_id(id: i32) -> Self {
        match id {
            0 => Namespace::Article,
            USER_TALK_NS => Namespace::UserTalk,
            other => Namespace::Other(other),
        }
    }

    pub fn id(self) -> i32 {
        match self {
            Namespace::Article => 0,
            Namespace::UserTalk => USER_TALK_NS,
            Namespace::Other(id) => id,
        }
    }

    /// Fallback for dumps without `<ns>`: infer from the title prefix.
    fn from_title(title: &str) -> Self {
        if title.starts_with("User talk:") {
            Namespace::UserTalk
        } else if title.contains(':') {
            Namespace::Other(-1)
        } else {
            Namespace::Article
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionRecord {
    pub page_id: u64,
    /// 1-based position in the page history; version 0 is the empty page.
    pub rev_ordinal: usize,
    pub author: AuthorId,
    /// UTC seconds since the epoch.
    pub timestamp: i64,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageHistory {
    pub page_id: u64,
    pub title: String,
    pub namespace: Namespace,
    pub class_label: Option<QualityClass>,
    pub revisions: Vec<RevisionRecord>,
}

impl PageHistory {
    /// Tokens of version `i`, where version 0 is the empty page.
    pub fn version(&self, i: usize) -> &[String] {
        if i == 0 {
            &[]
        } else {
            &self.revisions[i - 1].tokens
        }
    }

    pub fn latest(&self) -> Option<&RevisionRecord> {
        self.revisions.last()
    }
}

pub fn parse_timestamp(s: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(s.trim())
        .ok()
        .map(|t| t.timestamp())
}

pub fn format_timestamp(ts: i64) -> String {
    DateTime::from_timestamp(ts, 0)
        .map(|t| t.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| ts.to_string())
}

#[derive(Default)]
struct RevisionDraft {
    timestamp: Option<String>,
    username: Option<String>,
    ip: Option<String>,
    text: String,
}

#[derive(Default)]
struct PageDraft {
    title: String,
    ns: Option<String>,
    id: Option<String>,
    revisions: Vec<(AuthorId, i64, Vec<String>)>,
}

/// Iterator over the pages of a dump.
pub struct DumpReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    bots: BotConfig,
    stack: Vec<String>,
    finished: bool,
    warnings: usize,
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(source: R, bots: BotConfig) -> Self {
        let mut reader = Reader::from_reader(source);
        reader.config_mut().check_end_names = true;
        DumpReader {
            reader,
            buf: Vec::new(),
            bots,
            stack: Vec::new(),
            finished: false,
            warnings: 0,
        }
    }

    /// Number of warnings raised so far (reordered revisions, missing
    /// contributors).
    pub fn warnings(&self) -> usize {
        self.warnings
    }

    /// Bytes consumed from the underlying stream so far.
    pub fn position(&self) -> u64 {
        self.reader.buffer_position()
    }

    fn xml_error(&self, message: impl Into<String>) -> Error {
        Error::Xml {
            offset: self.reader.buffer_position(),
            message: message.into(),
        }
    }

    fn parent(&self) -> Option<&str> {
        self.stack
            .len()
            .checked_sub(2)
            .map(|i| self.stack[i].as_str())
    }

    fn next_page(&mut self) -> Result<Option<PageHistory>> {
        let mut page: Option<PageDraft> = None;
        let mut rev: Option<RevisionDraft> = None;
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev.into_owned(),
                Err(e) => {
                    return Err(Error::Xml {
                        offset: self.reader.error_position(),
                        message: e.to_string(),
                    })
                }
            };
            match event {
                Event::Start(e) => {
                    let name = e.local_name().as_ref().to_string();
                    match name.as_str() {
                        "page" => page = Some(PageDraft::default()),
                        "revision" if page.is_some() => rev = Some(RevisionDraft::default()),
                        _ => {}
                    }
                    self.stack.push(name);
                }
                Event::Empty(e) => {
                    // An empty <contributor/> is a suppressed contributor and is
                    // handled when the revision closes.
                    if e.local_name().as_ref() == "page" {
                        return Err(self.xml_error("empty <page> element"));
                    }
                }
                Event::End(_) => {
                    let name = self
                        .stack
                        .pop()
                        .ok_or_else(|| self.xml_error("unbalanced end tag"))?;
                    match name.as_str() {
                        "revision" => {
                            if let (Some(draft), Some(p)) = (rev.take(), page.as_mut()) {
                                let record = self.finish_revision(draft, &p.title)?;
                                p.revisions.push(record);
                            }
                        }
                        "page" => {
                            let draft = page
                                .take()
                                .ok_or_else(|| self.xml_error("</page> without <page>"))?;
                            return self.finish_page(draft).map(Some);
                        }
                        _ => {}
                    }
                }
                Event::Text(t) => {
                    let text = t.xml10_content();
                    self.append_text(&mut page, &mut rev, &text);
                }
                Event::CData(t) => {
                    let text = t.xml10_content();
                    self.append_text(&mut page, &mut rev, &text);
                }
                Event::GeneralRef(r) => {
                    let resolved = if r.is_char_ref() {
                        match r.resolve_char_ref() {
                            Ok(Some(c)) => c.to_string(),
                            _ => return Err(self.xml_error("invalid character reference")),
                        }
                    } else {
                        let name = r.xml10_content();
                        match resolve_predefined_entity(&name) {
                            Some(s) => s.to_string(),
                            None => return Err(self.xml_error(format!("unknown entity &{name};"))),
                        }
                    };
                    self.append_text(&mut page, &mut rev, &resolved);
                }
                Event::Eof => {
                    if !self.stack.is_empty() {
                        return Err(self.xml_error(format!(
                            "unexpected end of input inside <{}>",
                            self.stack.last().map(String::as_str).unwrap_or("")
                        )));
                    }
                    self.finished = true;
                    return Ok(None);
                }
                Event::Comment(_) | Event::Decl(_) | Event::PI(_) | Event::DocType(_) => {}
            }
        }
    }

    fn append_text(
        &self,
        page: &mut Option<PageDraft>,
        rev: &mut Option<RevisionDraft>,
        text: &str,
    ) {
        let (Some(elem), Some(parent)) = (self.stack.last(), self.parent()) else {
            return;
        };
        if let Some(r) = rev.as_mut() {
            match (parent, elem.as_str()) {
                ("revision", "timestamp") => {
                    r.timestamp.get_or_insert_with(String::new).push_str(text)
                }
                ("revision", "text") => r.text.push_str(text),
                ("contributor", "username") => {
                    r.username.get_or_insert_with(String::new).push_str(text)
                }
                ("contributor", "ip") => r.ip.get_or_insert_with(String::new).push_str(text),
                _ => {}
            }
        } else if let Some(p) = page.as_mut() {
            match (parent, elem.as_str()) {
                ("page", "title") => p.title.push_str(text),
                ("page", "ns") => p.ns.get_or_insert_with(String::new).push_str(text),
                ("page", "id") => p.id.get_or_insert_with(String::new).push_str(text),
                _ => {}
            }
        }
    }

    fn finish_revision(
        &mut self,
        draft: RevisionDraft,
        title: &str,
    ) -> Result<(AuthorId, i64, Vec<String>)> {
        let raw_ts = draft
            .timestamp
            .ok_or_else(|| self.xml_error(format!("revision of `{title}` has no timestamp")))?;
        let timestamp = parse_timestamp(&raw_ts)
            .ok_or_else(|| self.xml_error(format!("bad timestamp `{raw_ts}`")))?;
        let author = match (draft.username, draft.ip) {
            (Some(name), _) if !name.trim().is_empty() => AuthorId::classify(&name, &self.bots),
            (_, Some(ip)) if !ip.trim().is_empty() => {
                let mut id = AuthorId::classify(&ip, &self.bots);
                id.kind = super::author::AuthorKind::Anonymous;
                id
            }
            _ => {
                self.warnings += 1;
                warn!(
                    "revision of `{title}` at {raw_ts} has no contributor; treating as anonymous"
                );
                AuthorId::unknown()
            }
        };
        Ok((author, timestamp, tokenize(&draft.text)))
    }

    fn finish_page(&mut self, draft: PageDraft) -> Result<PageHistory> {
        let page_id: u64 = draft
            .id
            .as_deref()
            .map(str::trim)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.xml_error(format!("page `{}` has no valid id", draft.title)))?;
        let namespace = match draft.ns.as_deref().map(str::trim) {
            Some(ns) => Namespace::from_id(
                ns.parse()
                    .map_err(|_| self.xml_error(format!("bad namespace `{ns}`")))?,
            ),
            None => Namespace::from_title(&draft.title),
        };
        let mut revisions = draft.revisions;
        if revisions.windows(2).any(|w| w[0].1 > w[1].1) {
            self.warnings += 1;
            warn!("page {page_id} has out-of-order revisions; reordering by timestamp");
            // stable: equal timestamps keep dump order
            revisions.sort_by_key(|r| r.1);
        }
        let revisions = revisions
            .into_iter()
            .enumerate()
            .map(|(i, (author, timestamp, tokens))| RevisionRecord {
                page_id,
                rev_ordinal: i + 1,
                author,
                timestamp,
                tokens,
            })
            .collect();
        Ok(PageHistory {
            page_id,
            title: draft.title,
            namespace,
            class_label: None,
            revisions,
        })
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<PageHistory>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        match self.next_page() {
            Ok(Some(page)) => Some(Ok(page)),
            Ok(None) => None,
            Err(e) => {
                self.finished = true;
                Some(Err(e))
            }
        }
    }
}

pub fn parse_dump<R: BufRead>(source: R, bots: BotConfig) -> DumpReader<R> {
    DumpReader::new(source, bots)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Contributor {
    User(String),
    Ip(String),
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpRevision {
    pub contributor: Contributor,
    pub timestamp: i64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpPage {
    pub id: u64,
    pub title: String,
    pub ns: i32,
    pub revisions: Vec<DumpRevision>,
}

impl From<&PageHistory> for DumpPage {
    /// Re-emits a parsed page with each revision's tokens joined by single
    /// spaces, which tokenizes back to the same sequence.
    fn from(page: &PageHistory) -> Self {
        DumpPage {
            id: page.page_id,
            title: page.title.clone(),
            ns: page.namespace.id(),
            revisions: page
                .revisions
                .iter()
                .map(|r| DumpRevision {
                    contributor: if r.author.is_anonymous() {
                        Contributor::Ip(r.author.name.clone())
                    } else {
                        Contributor::User(r.author.name.clone())
                    },
                    timestamp: r.timestamp,
                    text: r.tokens.join(" "),
                })
                .collect(),
        }
    }
}

/// Writes a schema-0.10 export containing only the elements the reader uses.
pub struct DumpWriter<W: Write> {
    out: W,
    next_rev_id: u64,
}

impl<W: Write> DumpWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(
            out,
            r#"<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/" version="0.10" xml:lang="en">"#
        )?;
        Ok(DumpWriter {
            out,
            next_rev_id: 1,
        })
    }

    pub fn write_page(&mut self, page: &DumpPage) -> std::io::Result<()> {
        let out = &mut self.out;
        writeln!(out, "  <page>")?;
        writeln!(out, "    <title>{}</title>", escape(page.title.as_str()))?;
        writeln!(out, "    <ns>{}</ns>", page.ns)?;
        writeln!(out, "    <id>{}</id>", page.id)?;
        for rev in &page.revisions {
            writeln!(out, "    <revision>")?;
            writeln!(out, "      <id>{}</id>", self.next_rev_id)?;
            self.next_rev_id += 1;
            writeln!(
                out,
                "      <timestamp>{}</timestamp>",
                format_timestamp(rev.timestamp)
            )?;
            match &rev.contributor {
                Contributor::User(name) => writeln!(
                    out,
                    "      <contributor><username>{}</username></contributor>",
                    escape(name.as_str())
                )?,
                Contributor::Ip(ip) => writeln!(
                    out,
                    "      <contributor><ip>{}</ip></contributor>",
                    escape(ip.as_str())
                )?,
                Contributor::Missing => {
                    writeln!(out, r#"      <contributor deleted="deleted" />"#)?
                }
            }
            writeln!(
                out,
                r#"      <text xml:space="preserve">{}</text>"#,
                escape(rev.text.as_str())
            )?;
            writeln!(out, "    </revision>")?;
        }
        writeln!(out, "  </page>")
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        writeln!(self.out, "</mediawiki>")?;
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_dump<'a, W, I>(out: W, pages: I) -> std::io::Result<W>
where
    W: Write,
    I: IntoIterator<Item = &'a PageHistory>,
{
    let mut writer = DumpWriter::new(out)?;
    for page in pages {
        writer.write_page(&DumpPage::from(page))?;
    }
    writer.finish()
}
