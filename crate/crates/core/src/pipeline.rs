//! Stage orchestration over TSV intermediates in a work directory.
//!
//! Every stage writes its outputs atomically and records a manifest with the
//! SHA-256 of each input and output plus a hash of the configuration that
//! affects it. Before a stage runs, the manifests of its upstream stages are
//! checked so that missing or out-of-date intermediates are reported instead
//! of silently consumed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::centrality::{self, CentralityParams, CentralityTable, Metric};
use crate::error::{Error, Result};
use crate::eval::{self, GainScheme, Ranking};
use crate::ingest::{
    load_ratings, parse_dump, write_revision_rows, AuthorId, AuthorKind, BotConfig, Namespace,
    PageHistory, QualityClass, Ratings, REVISION_STORE_HEADER,
};
use crate::longevity::{
    page_contributions, select_all, AuthorSelection, ContributionOptions, ContributionTable,
    SelectionParams,
};
use crate::network::{self, AuthorGraph, GraphKind, NameIndex};
use crate::quality::{self, Model, QualityScoreTable};

pub const PAGES_FILE: &str = "pages.tsv";
pub const REVISIONS_FILE: &str = "revisions.tsv";
pub const CONTRIBUTIONS_FILE: &str = "contributions.tsv";
pub const DIAGNOSTICS_FILE: &str = "page_diagnostics.tsv";
pub const SELECTIONS_FILE: &str = "selections.tsv";
pub const EDGES_FILE: &str = "network.edges.tsv";
pub const NODES_FILE: &str = "network.nodes.tsv";
pub const CENTRALITY_FILE: &str = "centrality.tsv";
pub const SCORES_FILE: &str = "scores.tsv";
pub const PROVENANCE_FILE: &str = "score_provenance.json";
pub const REPORT_FILE: &str = "report.tsv";
pub const FILTERED_FILE: &str = "filtered.tsv";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";
const MANIFEST_DIR: &str = "manifests";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paths {
    pub dump: PathBuf,
    pub ratings: PathBuf,
    #[serde(default = "default_workdir")]
    pub workdir: PathBuf,
}

fn default_workdir() -> PathBuf {
    PathBuf::from("work")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BotSettings {
    pub exclude: bool,
    pub bot_list: Option<PathBuf>,
    pub suffix_heuristic: bool,
}

impl Default for BotSettings {
    fn default() -> Self {
        BotSettings {
            exclude: true,
            bot_list: None,
            suffix_heuristic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    /// Cutoffs to report besides the full corpus size; values above the
    /// corpus size are skipped.
    pub k: Vec<usize>,
    pub gains: GainScheme,
    pub buckets: usize,
    pub relevant: BTreeSet<QualityClass>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            k: vec![100, 1000],
            gains: GainScheme::default(),
            buckets: 10,
            relevant: [QualityClass::FA, QualityClass::A, QualityClass::GA].into(),
        }
    }
}

/// Which quality model family to score; centrality-based families use the
/// configured metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Longevity,
    Centrality,
    Combined,
}

impl ModelKind {
    pub fn with_metric(self, metric: Metric) -> Model {
        match self {
            ModelKind::Longevity => Model::Longevity,
            ModelKind::Centrality => Model::Centrality(metric),
            ModelKind::Combined => Model::Combined(metric),
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "longevity" => Ok(ModelKind::Longevity),
            "centrality" => Ok(ModelKind::Centrality),
            "combined" => Ok(ModelKind::Combined),
            _ => Err(format!(
                "unknown model `{s}` (expected longevity, centrality or combined)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub paths: Paths,
    #[serde(default)]
    pub selection: SelectionParams,
    #[serde(default)]
    pub bots: BotSettings,
    #[serde(default = "default_network")]
    pub network: GraphKind,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default)]
    pub centrality: CentralityParams,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default)]
    pub eval: EvalSettings,
}

fn default_network() -> GraphKind {
    GraphKind::TalkHistory
}

fn default_metric() -> Metric {
    Metric::PageRank
}

fn default_models() -> Vec<ModelKind> {
    vec![
        ModelKind::Longevity,
        ModelKind::Centrality,
        ModelKind::Combined,
    ]
}

impl RunConfig {
    /// Defaults for everything except the input paths.
    pub fn new(
        dump: impl Into<PathBuf>,
        ratings: impl Into<PathBuf>,
        workdir: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            paths: Paths {
                dump: dump.into(),
                ratings: ratings.into(),
                workdir: workdir.into(),
            },
            selection: SelectionParams::default(),
            bots: BotSettings::default(),
            network: default_network(),
            metric: default_metric(),
            centrality: CentralityParams::default(),
            models: default_models(),
            eval: EvalSettings::default(),
        }
    }

    /// Reads a TOML config; relative paths resolve against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.paths.dump);
        resolve(&mut cfg.paths.ratings);
        resolve(&mut cfg.paths.workdir);
        if let Some(p) = cfg.bots.bot_list.as_mut() {
            resolve(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.selection;
        if !(0.0..=1.0).contains(&s.theta) {
            return Err(Error::Config(format!(
                "selection.theta must be a fraction in [0, 1], got {}",
                s.theta
            )));
        }
        if s.min_contrib < 0.0 {
            return Err(Error::Config(
                "selection.min_contrib must be non-negative".into(),
            ));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        if self.eval.buckets < 2 {
            return Err(Error::Config("eval.buckets must be at least 2".into()));
        }
        if self.eval.k.contains(&0) {
            return Err(Error::Config("eval.k values must be positive".into()));
        }
        let pr = &self.centrality.pagerank;
        if !(0.0..1.0).contains(&pr.damping) {
            return Err(Error::Config(format!(
                "pagerank damping must be in [0, 1), got {}",
                pr.damping
            )));
        }
        self.eval.gains.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn bot_config(&self) -> Result<BotConfig> {
        match &self.bots.bot_list {
            Some(path) => BotConfig::load_list(path, self.bots.suffix_heuristic),
            None => Ok(BotConfig::with_names(
                Vec::<String>::new(),
                self.bots.suffix_heuristic,
            )),
        }
    }

    pub fn quality_models(&self) -> Vec<Model> {
        let mut models: Vec<Model> = self
            .models
            .iter()
            .map(|k| k.with_metric(self.metric))
            .collect();
        models.sort();
        models.dedup();
        models
    }

    fn needs_centrality(&self) -> bool {
        self.models.iter().any(|k| *k != ModelKind::Longevity)
    }

    fn workfile(&self, name: &str) -> PathBuf {
        self.paths.workdir.join(name)
    }

    /// Hash of every setting that can change this stage's outputs,
    /// including those of its upstream stages.
    fn stage_hash(&self, stage: Stage) -> String {
        let mut key = serde_json::Map::new();
        let mut put = |k: &str, v: serde_json::Value| {
            key.insert(k.to_string(), v);
        };
        put("suffix_heuristic", self.bots.suffix_heuristic.into());
        if stage >= Stage::Contrib {
            put("exclude_bots", self.bots.exclude.into());
        }
        if stage >= Stage::Select {
            put("selection", serde_json::to_value(self.selection).unwrap());
        }
        if stage >= Stage::Net {
            put("network", serde_json::to_value(self.network).unwrap());
        }
        if stage >= Stage::Centrality {
            put("metric", serde_json::to_value(self.metric).unwrap());
            put("centrality", serde_json::to_value(self.centrality).unwrap());
        }
        if stage >= Stage::Score {
            put(
                "models",
                serde_json::to_value(self.quality_models()).unwrap(),
            );
        }
        if stage >= Stage::Eval {
            put("eval", serde_json::to_value(&self.eval).unwrap());
        }
        hex(&Sha256::digest(serde_json::Value::Object(key).to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Contrib,
    Select,
    Net,
    Centrality,
    Score,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Contrib,
        Stage::Select,
        Stage::Net,
        Stage::Centrality,
        Stage::Score,
        Stage::Eval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Contrib => "contrib",
            Stage::Select => "select",
            Stage::Net => "net",
            Stage::Centrality => "centrality",
            Stage::Score => "score",
            Stage::Eval => "eval",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: Stage,
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let mut reader = open_buffered(path)?;
    let mut hasher = Sha256::new();
    loop {
        let chunk = reader.fill_buf().map_err(|e| Error::io(path, e))?;
        if chunk.is_empty() {
            break;
        }
        hasher.update(chunk);
        let n = chunk.len();
        reader.consume(n);
    }
    Ok(hex(&hasher.finalize()))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn manifest_path(cfg: &RunConfig, stage: Stage) -> PathBuf {
    cfg.paths
        .workdir
        .join(MANIFEST_DIR)
        .join(format!("{stage}.json"))
}

pub fn read_manifest(cfg: &RunConfig, stage: Stage) -> Result<Option<Manifest>> {
    let path = manifest_path(cfg, stage);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::table(&path, e.line(), e.to_string()))
}

/// Collects a stage's inputs and outputs as it runs.
struct StageRun<'c> {
    cfg: &'c RunConfig,
    stage: Stage,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl<'c> StageRun<'c> {
    fn start(cfg: &'c RunConfig, stage: Stage) -> Self {
        info!("running stage {stage}");
        StageRun {
            cfg,
            stage,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// An input from outside the work directory.
    fn external(&mut self, key: &str, path: &Path) -> Result<()> {
        if !path.exists() {
            return Err(Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "input not found"),
            ));
        }
        self.inputs.insert(key.to_string(), file_sha256(path)?);
        Ok(())
    }

    /// An intermediate produced by `producer`; checked against that stage's
    /// manifest.
    fn upstream(&mut self, producer: Stage, name: &str) -> Result<PathBuf> {
        let path = self.cfg.workfile(name);
        let missing = || Error::MissingUpstream {
            stage: producer.to_string(),
            artifact: path.clone(),
        };
        if !path.exists() {
            return Err(missing());
        }
        let manifest = read_manifest(self.cfg, producer)?.ok_or_else(missing)?;
        let stale = |reason: String| Error::StaleArtifact {
            stage: producer.to_string(),
            artifact: path.clone(),
            reason,
        };
        let hash = file_sha256(&path)?;
        if manifest.outputs.get(name) != Some(&hash) {
            return Err(stale("contents differ from what the stage recorded".into()));
        }
        if manifest.config_hash != self.cfg.stage_hash(producer) {
            return Err(stale("configuration changed since the stage ran".into()));
        }
        for (input, recorded) in &manifest.inputs {
            let current = match input.as_str() {
                "dump" => file_sha256(&self.cfg.paths.dump)?,
                "ratings" => file_sha256(&self.cfg.paths.ratings)?,
                "bot_list" => match &self.cfg.bots.bot_list {
                    Some(p) => file_sha256(p)?,
                    None => return Err(stale("bot list removed from configuration".into())),
                },
                other => {
                    let p = self.cfg.workfile(other);
                    if !p.exists() {
                        return Err(stale(format!("its input {other} no longer exists")));
                    }
                    file_sha256(&p)?
                }
            };
            if &current != recorded {
                return Err(stale(format!("input {input} changed since the stage ran")));
            }
        }
        self.inputs.insert(name.to_string(), hash);
        Ok(path)
    }

    fn bot_list_input(&mut self) -> Result<()> {
        if let Some(p) = &self.cfg.bots.bot_list {
            self.external("bot_list", p)?;
        }
        Ok(())
    }

    fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.cfg.workfile(name), bytes)?;
        self.outputs
            .insert(name.to_string(), hex(&Sha256::digest(bytes)));
        Ok(())
    }

    fn finish(self) -> Result<Manifest> {
        let manifest = Manifest {
            stage: self.stage,
            config_hash: self.cfg.stage_hash(self.stage),
            inputs: self.inputs,
            outputs: self.outputs,
        };
        write_atomic(
            &self.cfg.workfile(RESOLVED_CONFIG_FILE),
            self.cfg.to_toml().as_bytes(),
        )?;
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        write_atomic(&manifest_path(self.cfg, self.stage), json.as_bytes())?;
        Ok(manifest)
    }
}

fn open_buffered(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Streams the dump, handing each page to `f`.
fn for_each_page(
    cfg: &RunConfig,
    bots: &BotConfig,
    mut f: impl FnMut(PageHistory) -> Result<()>,
) -> Result<usize> {
    let mut reader = parse_dump(open_buffered(&cfg.paths.dump)?, bots.clone());
    for page in reader.by_ref() {
        f(page?)?;
    }
    Ok(reader.warnings())
}

/// Splits TSV lines after a one-line header, with 1-based line numbers.
fn tsv_rows(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rows = Vec::new();
    for (idx, line) in open_buffered(path)?.lines().enumerate().skip(1) {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        rows.push((idx + 1, line.split('\t').map(str::to_string).collect()));
    }
    Ok(rows)
}

fn field<T: FromStr>(path: &Path, line: usize, value: &str, what: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::table(path, line, format!("bad {what} `{value}`")))
}

fn expect_width(path: &Path, line: usize, row: &[String], n: usize) -> Result<()> {
    if row.len() == n {
        Ok(())
    } else {
        Err(Error::table(
            path,
            line,
            format!("expected {n} columns, found {}", row.len()),
        ))
    }
}

fn ingest(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::start(cfg, Stage::Ingest);
    run.external("dump", &cfg.paths.dump)?;
    run.external("ratings", &cfg.paths.ratings)?;
    run.bot_list_input()?;
    let bots = cfg.bot_config()?;
    let ratings = load_ratings(&cfg.paths.ratings)?;

    let mut pages = String::from("page_id\tnamespace\ttitle\trevisions\tclass\n");
    let mut revisions = format!("{REVISION_STORE_HEADER}\n").into_bytes();
    let mut seen = BTreeSet::new();
    let warnings = for_each_page(cfg, &bots, |page| {
        let class = ratings.get(&page.page_id).map_or("-", |c| c.as_str());
        pages.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            page.page_id,
            page.namespace.id(),
            page.title.replace(['\t', '\n'], " "),
            page.revisions.len(),
            class
        ));
        write_revision_rows(&mut revisions, &page).expect("writing to memory");
        seen.insert(page.page_id);
        Ok(())
    })?;
    if warnings > 0 {
        warn!("dump parsed with {warnings} warnings");
    }
    let unmatched = ratings.keys().filter(|id| !seen.contains(id)).count();
    if unmatched > 0 {
        warn!("{unmatched} rated pages are absent from the dump");
    }
    run.emit(PAGES_FILE, pages.as_bytes())?;
    run.emit(REVISIONS_FILE, &revisions)?;
    run.finish()
}

/// Article page ids listed by the ingest stage.
fn read_article_ids(path: &Path) -> Result<Vec<u64>> {
    let mut ids = Vec::new();
    for (line, row) in tsv_rows(path)? {
        expect_width(path, line, &row, 5)?;
        let ns: i32 = field(path, line, &row[1], "namespace")?;
        if Namespace::from_id(ns) == Namespace::Article {
            ids.push(field(path, line, &row[0], "page id")?);
        }
    }
    Ok(ids)
}

fn contrib(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::start(cfg, Stage::Contrib);
    run.upstream(Stage::Ingest, PAGES_FILE)?;
    run.external("dump", &cfg.paths.dump)?;
    run.bot_list_input()?;
    let bots = cfg.bot_config()?;
    let opts = ContributionOptions {
        exclude_bots: cfg.bots.exclude,
    };

    let mut articles = Vec::new();
    for_each_page(cfg, &bots, |page| {
        if page.namespace == Namespace::Article {
            articles.push(page);
        }
        Ok(())
    })?;
    let results = contributions_parallel(&articles, opts)?;

    let mut table = ContributionTable::new();
    let mut diag = String::from("page_id\trevisions\tunjudged\tnegative\tmax_revision_share\n");
    for (part, d) in results {
        table.merge(part);
        diag.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            d.page_id, d.revisions, d.unjudged, d.negative, d.max_revision_share
        ));
    }
    let mut rows = String::from("page_id\tauthor\tkind\tcontrib\n");
    for (page, author, c) in table.sorted_rows() {
        rows.push_str(&format!("{page}\t{}\t{}\t{c}\n", author.name, author.kind));
    }
    run.emit(CONTRIBUTIONS_FILE, rows.as_bytes())?;
    run.emit(DIAGNOSTICS_FILE, diag.as_bytes())?;
    run.finish()
}

/// Pages are independent, so they are judged on scoped threads; results
/// come back in input order.
fn contributions_parallel(
    pages: &[PageHistory],
    opts: ContributionOptions,
) -> Result<Vec<(ContributionTable, crate::longevity::PageDiagnostics)>> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(pages.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<_>>> = (0..pages.len()).map(|_| None).collect();
    let done = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= pages.len() {
                    break;
                }
                let result = page_contributions(&pages[i], opts);
                done.lock().expect("worker panicked")[i] = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every page judged"))
        .collect()
}

pub fn read_contributions(path: &Path) -> Result<ContributionTable> {
    let mut table = ContributionTable::new();
    for (line, row) in tsv_rows(path)? {
        expect_width(path, line, &row, 4)?;
        let page: u64 = field(path, line, &row[0], "page id")?;
        let kind: AuthorKind = field(path, line, &row[2], "author kind")?;
        let c: f64 = field(path, line, &row[3], "contribution")?;
        table.insert(
            page,
            AuthorId {
                name: row[1].clone(),
                kind,
            },
            c,
        );
    }
    Ok(table)
}

fn select(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::start(cfg, Stage::Select);
    let pages = run.upstream(Stage::Ingest, PAGES_FILE)?;
    let contributions = run.upstream(Stage::Contrib, CONTRIBUTIONS_FILE)?;
    let mut table = read_contributions(&contributions)?;
    for id in read_article_ids(&pages)? {
        table.touch_page(id);
    }
    let selections = select_all(&table, cfg.selection);
    let mut out = String::from("page_id\trank\tauthor\tkind\tcontrib\n");
    for sel in &selections {
        for (rank, (a, c)) in sel.authors.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{c}\n",
                sel.page_id,
                rank + 1,
                a.name,
                a.kind
            ));
        }
    }
    run.emit(SELECTIONS_FILE, out.as_bytes())?;
    run.finish()
}

/// Selections for every article page; pages without selected authors get
/// an empty selection.
pub fn read_selections(
    path: &Path,
    article_ids: &[u64],
    params: SelectionParams,
) -> Result<Vec<AuthorSelection>> {
    let mut by_page: BTreeMap<u64, Vec<(AuthorId, f64)>> =
        article_ids.iter().map(|&id| (id, Vec::new())).collect();
    for (line, row) in tsv_rows(path)? {
        expect_width(path, line, &row, 5)?;
        let page: u64 = field(path, line, &row[0], "page id")?;
        let kind: AuthorKind = field(path, line, &row[3], "author kind")?;
        let c: f64 = field(path, line, &row[4], "contribution")?;
        by_page.entry(page).or_default().push((
            AuthorId {
                name: row[2].clone(),
                kind,
            },
            c,
        ));
    }
    Ok(by_page
        .into_iter()
        .map(|(page_id, authors)| AuthorSelection {
            page_id,
            authors,
            params,
        })
        .collect())
}

fn net(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::start(cfg, Stage::Net);
    let pages = run.upstream(Stage::Ingest, PAGES_FILE)?;
    let selections = run.upstream(Stage::Select, SELECTIONS_FILE)?;
    let selections = read_selections(&selections, &read_article_ids(&pages)?, cfg.selection)?;
    let project: BTreeSet<String> = selections
        .iter()
        .flat_map(|s| s.authors.iter().map(|(a, _)| a.name.clone()))
        .collect();

    let full = match cfg.network {
        GraphKind::Coauthor => network::build_coauthor(&selections),
        kind => {
            run.external("dump", &cfg.paths.dump)?;
            run.bot_list_input()?;
            let bots = cfg.bot_config()?;
            let mut talk = Vec::new();
            let mut names = BTreeSet::new();
            for_each_page(cfg, &bots, |page| {
                for rev in &page.revisions {
                    if !rev.author.is_anonymous() {
                        names.insert(rev.author.name.clone());
                    }
                }
                if page.namespace == Namespace::UserTalk {
                    talk.push(page);
                }
                Ok(())
            })?;
            if kind == GraphKind::TalkSignature {
                network::build_talk_signature(&talk, &bots, &NameIndex::new(&names))
            } else {
                network::build_talk_history(&talk, &bots)
            }
        }
    };
    let graph = network::restrict_and_filter(&full, &project, cfg.bots.exclude);
    info!(
        "{} network: {} nodes, {} edges (before restriction: {} nodes)",
        graph.kind(),
        graph.node_count(),
        graph.edge_count(),
        full.node_count()
    );
    let mut edges = Vec::new();
    graph
        .write_edge_list(&mut edges)
        .expect("writing to memory");
    let mut nodes = Vec::new();
    graph
        .write_node_list(&mut nodes)
        .expect("writing to memory");
    run.emit(EDGES_FILE, &edges)?;
    run.emit(NODES_FILE, &nodes)?;
    run.finish()
}

pub fn read_graph(nodes: &Path, edges: &Path) -> Result<AuthorGraph> {
    AuthorGraph::read(open_buffered(nodes)?, nodes, open_buffered(edges)?, edges)
}

fn centrality_stage(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::start(cfg, Stage::Centrality);
    let edges = run.upstream(Stage::Net, EDGES_FILE)?;
    let nodes = run.upstream(Stage::Net, NODES_FILE)?;
    let graph = read_graph(&nodes, &edges)?;
    let table = centrality::compute(cfg.metric, &graph, cfg.centrality)?;
    let mut out = Vec::new();
    table.write_tsv(&mut out).expect("writing to memory");
    run.emit(CENTRALITY_FILE, &out)?;
    run.finish()
}

pub fn read_centrality(path: &Path) -> Result<CentralityTable> {
    let mut lines = open_buffered(path)?.lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::table(path, 1, "missing header")),
    };
    let mut metric = None;
    let mut graph_kind = None;
    let mut params = Vec::new();
    for kv in header.trim_start_matches('#').split_whitespace() {
        match kv.split_once('=') {
            Some(("metric", m)) => {
                metric = Some(m.parse().map_err(|e: String| Error::table(path, 1, e))?)
            }
            Some(("graph", g)) => {
                graph_kind = Some(g.parse().map_err(|e: String| Error::table(path, 1, e))?)
            }
            _ => params.push(kv),
        }
    }
    let (Some(metric), Some(graph_kind)) = (metric, graph_kind) else {
        return Err(Error::table(path, 1, format!("bad header `{header}`")));
    };
    let mut scores = BTreeMap::new();
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let Some((author, score)) = line.split_once('\t') else {
            return Err(Error::table(path, idx + 2, "expected author<TAB>score"));
        };
        scores.insert(author.to_string(), field(path, idx + 2, score, "score")?);
    }
    Ok(CentralityTable {
        metric,
        graph_kind,
        params: params.join(" "),
        scores,
    })
}

fn score(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::start(cfg, Stage::Score);
    let pages = run.upstream(Stage::Ingest, PAGES_FILE)?;
    let contributions = run.upstream(Stage::Contrib, CONTRIBUTIONS_FILE)?;
    let selections = run.upstream(Stage::Select, SELECTIONS_FILE)?;
    let cent = if cfg.needs_centrality() {
        Some(read_centrality(
            &run.upstream(Stage::Centrality, CENTRALITY_FILE)?,
        )?)
    } else {
        None
    };
    let selections = read_selections(&selections, &read_article_ids(&pages)?, cfg.selection)?;
    let contributions = read_contributions(&contributions)?;

    let tables: Vec<QualityScoreTable> = cfg
        .quality_models()
        .into_iter()
        .map(|model| match model {
            Model::Longevity => quality::longevity_qscore(&selections, &contributions),
            Model::Centrality(_) => {
                quality::centrality_qscore(&selections, cent.as_ref().expect("loaded above"))
            }
            Model::Combined(_) => quality::combined_qscore(
                &selections,
                &contributions,
                cent.as_ref().expect("loaded above"),
            ),
        })
        .collect();
    let mut out = String::from("page_id\tmodel\tscore\n");
    let mut provenance = BTreeMap::new();
    for t in &tables {
        for (page, s) in &t.scores {
            out.push_str(&format!("{page}\t{}\t{s}\n", t.model));
        }
        provenance.insert(t.model.to_string(), &t.provenance);
    }
    let json = serde_json::to_string_pretty(&provenance).expect("provenance serializes") + "\n";
    run.emit(SCORES_FILE, out.as_bytes())?;
    run.emit(PROVENANCE_FILE, json.as_bytes())?;
    run.finish()
}

pub fn read_scores(path: &Path) -> Result<BTreeMap<Model, BTreeMap<u64, f64>>> {
    let mut out: BTreeMap<Model, BTreeMap<u64, f64>> = BTreeMap::new();
    for (line, row) in tsv_rows(path)? {
        expect_width(path, line, &row, 3)?;
        let page: u64 = field(path, line, &row[0], "page id")?;
        let model: Model = field(path, line, &row[1], "model")?;
        let s: f64 = field(path, line, &row[2], "score")?;
        out.entry(model).or_default().insert(page, s);
    }
    Ok(out)
}

/// NDCG rows for one model: configured cutoffs no larger than the corpus,
/// then the full corpus.
pub fn ndcg_rows(
    scores: &BTreeMap<u64, f64>,
    labels: &Ratings,
    cfg: &EvalSettings,
) -> Result<Vec<(usize, f64)>> {
    let ranking = Ranking::from_scores(scores, labels);
    let n = ranking.len();
    let mut ks: Vec<usize> = cfg.k.iter().copied().filter(|&k| k < n).collect();
    ks.push(n);
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .map(|k| eval::ndcg(&ranking, k, &cfg.gains).map(|v| (k, v)))
        .collect()
}

fn eval_stage(cfg: &RunConfig) -> Result<Manifest> {
    let mut run = StageRun::start(cfg, Stage::Eval);
    let scores = run.upstream(Stage::Score, SCORES_FILE)?;
    run.external("ratings", &cfg.paths.ratings)?;
    let scores = read_scores(&scores)?;
    let labels = load_ratings(&cfg.paths.ratings)?;
    let e = &cfg.eval;

    let mut report = String::from("model\tk\tndcg\n");
    let mut filtered = String::from("model\tfilter\tpages\tndcg\n");
    let mut extra: Vec<(String, Vec<u8>)> = Vec::new();
    for (model, s) in &scores {
        for (k, v) in ndcg_rows(s, &labels, e)? {
            report.push_str(&format!("{model}\t{k}\t{v:.6}\n"));
        }
        for (name, keep) in eval::table_filters() {
            let pages = labels.values().filter(|c| keep.contains(c)).count();
            match eval::filtered_eval(s, &labels, &keep, None, &e.gains) {
                Ok(v) => filtered.push_str(&format!("{model}\t{name}\t{pages}\t{v:.6}\n")),
                Err(err) => {
                    warn!("{model} {name}: {err}");
                    filtered.push_str(&format!("{model}\t{name}\t{pages}\tNA\n"));
                }
            }
        }
        let mut pct = Vec::new();
        eval::percentile_table(s, &labels, e.buckets)?
            .write_tsv(&mut pct)
            .expect("writing to memory");
        extra.push((format!("percentile_{model}.tsv"), pct));
        match eval::precision_recall(s, &labels, &e.relevant) {
            Ok(curve) => {
                let mut pr = Vec::new();
                eval::write_pr_curve(&mut pr, &curve).expect("writing to memory");
                extra.push((format!("pr_{model}.tsv"), pr));
            }
            Err(err) => warn!("{model}: no precision-recall curve: {err}"),
        }
    }
    run.emit(REPORT_FILE, report.as_bytes())?;
    run.emit(FILTERED_FILE, filtered.as_bytes())?;
    for (name, bytes) in extra {
        run.emit(&name, &bytes)?;
    }
    run.finish()
}

pub fn run_stage(stage: Stage, cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    match stage {
        Stage::Ingest => ingest(cfg),
        Stage::Contrib => contrib(cfg),
        Stage::Select => select(cfg),
        Stage::Net => net(cfg),
        Stage::Centrality => centrality_stage(cfg),
        Stage::Score => score(cfg),
        Stage::Eval => eval_stage(cfg),
    }
}

/// Runs every stage in order. Centrality stages are skipped when no model
/// needs them.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<Manifest>> {
    Stage::ALL
        .into_iter()
        .filter(|&s| cfg.needs_centrality() || !matches!(s, Stage::Net | Stage::Centrality))
        .map(|s| run_stage(s, cfg))
        .collect()
}

/// Runs the full pipeline for every network and bot setting in
/// subdirectories of the work directory and writes `matrix.tsv` with the
/// full-corpus NDCG of each model.
pub fn run_matrix(cfg: &RunConfig) -> Result<PathBuf> {
    let labels = load_ratings(&cfg.paths.ratings)?;
    let mut columns = Vec::new();
    let mut cells: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for network in GraphKind::ALL {
        for exclude in [false, true] {
            let column = format!(
                "{network}/{}",
                if exclude { "without-bots" } else { "with-bots" }
            );
            let mut sub = cfg.clone();
            sub.network = network;
            sub.bots.exclude = exclude;
            sub.paths.workdir = cfg.paths.workdir.join(column.replace('/', "_"));
            run_all(&sub)?;
            for (model, scores) in read_scores(&sub.workfile(SCORES_FILE))? {
                let n = Ranking::from_scores(&scores, &labels).len();
                let v = eval::ndcg(&Ranking::from_scores(&scores, &labels), n, &cfg.eval.gains)?;
                cells
                    .entry(model.to_string())
                    .or_default()
                    .insert(column.clone(), v);
            }
            columns.push(column);
        }
    }
    let mut out = String::from("model");
    for c in &columns {
        out.push('\t');
        out.push_str(c);
    }
    out.push('\n');
    for (model, row) in &cells {
        out.push_str(model);
        for c in &columns {
            match row.get(c) {
                Some(v) => out.push_str(&format!("\t{v:.6}")),
                None => out.push_str("\tNA"),
            }
        }
        out.push('\n');
    }
    let path = cfg.workfile("matrix.tsv");
    write_atomic(&path, out.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = RunConfig::new("d.xml", "r.tsv", "w");
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg: RunConfig =
            toml::from_str("[paths]\ndump = \"d.xml\"\nratings = \"r.tsv\"\n").unwrap();
        assert_eq!(cfg.network, GraphKind::TalkHistory);
        assert_eq!(cfg.metric, Metric::PageRank);
        assert_eq!(cfg.selection.theta, 0.9);
        assert_eq!(cfg.eval.gains, GainScheme::default());
        assert_eq!(cfg.paths.workdir, PathBuf::from("work"));
    }

    #[test]
    fn theta_as_percentage_rejected() {
        let mut cfg = RunConfig::new("d", "r", "w");
        cfg.selection.theta = 90.0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn stage_hash_only_tracks_relevant_settings() {
        let a = RunConfig::new("d", "r", "w");
        let mut b = a.clone();
        b.metric = Metric::Degree;
        assert_eq!(a.stage_hash(Stage::Net), b.stage_hash(Stage::Net));
        assert_ne!(
            a.stage_hash(Stage::Centrality),
            b.stage_hash(Stage::Centrality)
        );
        b.paths.workdir = PathBuf::from("elsewhere");
        b.metric = Metric::PageRank;
        assert_eq!(a.stage_hash(Stage::Eval), b.stage_hash(Stage::Eval));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.tsv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn stage_names() {
        for s in Stage::ALL {
            assert_eq!(s.as_str().parse::<Stage>().unwrap(), s);
        }
    }
}
