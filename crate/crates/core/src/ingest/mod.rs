//! Dump ingestion: XML parsing, author classification, tokenization and
//! the ratings table.

mod author;
mod dump;
mod ratings;
mod tokenize;

use std::io::Write;

pub use author::{
    canonical_username, is_ip_literal, AuthorId, AuthorKind, BotConfig, UNKNOWN_CONTRIBUTOR,
};
pub use dump::{
    format_timestamp, parse_dump, parse_timestamp, write_dump, Contributor, DumpPage, DumpReader,
    DumpRevision, DumpWriter, Namespace, PageHistory, RevisionRecord, USER_TALK_NS,
};
pub use ratings::{
    class_histogram, load_ratings, parse_ratings, QualityClass, Ratings, RATINGS_HEADER,
};
pub use tokenize::tokenize;

pub const REVISION_STORE_HEADER: &str =
    "page_id\trev_ordinal\tauthor\tkind\ttimestamp\ttoken_count";

/// Appends one page's rows to the intermediate revision store.
pub fn write_revision_rows<W: Write>(out: &mut W, page: &PageHistory) -> std::io::Result<()> {
    for rev in &page.revisions {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            rev.page_id,
            rev.rev_ordinal,
            rev.author.name,
            rev.author.kind,
            rev.timestamp,
            rev.tokens.len()
        )?;
    }
    Ok(())
}
