use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use wikiq_core::centrality::Metric;
use wikiq_core::diff::edit_distance;
use wikiq_core::ingest::tokenize;
use wikiq_core::network::GraphKind;
use wikiq_core::pipeline::{self, ModelKind, RunConfig, Stage};
use wikiq_core::synth::{generate_synthetic, SynthSpec};
use wikiq_core::Error;

const USAGE_ERROR: u8 = 1;
const DATA_ERROR: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "wikiq",
    version,
    about = "Article quality scoring from edit longevity and author centrality"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse the dump and ratings into the page and revision stores.
    Ingest(StageArgs),
    /// Compute per-author edit-longevity contributions.
    Contrib(StageArgs),
    /// Select each page's main contributors.
    Select(StageArgs),
    /// Build the author network.
    Net(StageArgs),
    /// Compute author centrality on the network.
    Centrality(StageArgs),
    /// Score pages with the configured quality models.
    Score(StageArgs),
    /// Evaluate scores against the ratings.
    Eval(StageArgs),
    /// Run every stage in order.
    All(StageArgs),
    /// Run the pipeline for each network with and without bots and
    /// tabulate NDCG.
    Matrix(StageArgs),
    /// Generate a synthetic corpus, ratings file and starter config.
    Synth(SynthArgs),
    /// Print the edit-distance breakdown between two text files as JSON.
    Diff { a: PathBuf, b: PathBuf },
}

#[derive(Args, Debug)]
struct StageArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    workdir: Option<PathBuf>,
    #[arg(long, conflicts_with = "without_bots")]
    with_bots: bool,
    #[arg(long)]
    without_bots: bool,
    #[arg(long, value_parser = parse_from_str::<GraphKind>)]
    network: Option<GraphKind>,
    #[arg(long, value_parser = parse_from_str::<Metric>)]
    metric: Option<Metric>,
    /// Score only this model family.
    #[arg(long, value_parser = parse_from_str::<ModelKind>)]
    model: Option<ModelKind>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// TOML spec; defaults are used for anything it leaves out.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_from_str<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

impl StageArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(dir) = &self.workdir {
            cfg.paths.workdir = dir.clone();
        }
        if self.with_bots {
            cfg.bots.exclude = false;
        }
        if self.without_bots {
            cfg.bots.exclude = true;
        }
        if let Some(n) = self.network {
            cfg.network = n;
        }
        if let Some(m) = self.metric {
            cfg.metric = m;
        }
        if let Some(m) = self.model {
            cfg.models = vec![m];
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn synth(args: &SynthArgs) -> Result<(), Error> {
    let mut spec = match &args.spec {
        Some(path) => SynthSpec::load(path)?,
        None => SynthSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let corpus = generate_synthetic(&spec)?;
    let out = &args.out;
    std::fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    corpus.write_to(&out.join("corpus.xml"), &out.join("ratings.tsv"))?;
    let config = out.join("wikiq.toml");
    if !config.exists() {
        let cfg = RunConfig::new("corpus.xml", "ratings.tsv", "work");
        std::fs::write(&config, cfg.to_toml()).map_err(|e| io_error(&config, e))?;
    }
    println!(
        "wrote {} and {} (seed {}, anomalous Start pages: {:?})",
        out.join("corpus.xml").display(),
        out.join("ratings.tsv").display(),
        spec.seed,
        corpus.anomalous
    );
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn diff(a: &Path, b: &Path) -> Result<(), Error> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| io_error(p, e));
    let (ta, tb) = (tokenize(&read(a)?), tokenize(&read(b)?));
    let breakdown = edit_distance(&ta, &tb);
    println!(
        "{}",
        serde_json::to_string_pretty(&breakdown).expect("breakdown serializes")
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let stage = |s: Stage, args: &StageArgs| -> Result<(), Error> {
        let cfg = args.resolve()?;
        pipeline::run_stage(s, &cfg)?;
        info!("{s} done; outputs in {}", cfg.paths.workdir.display());
        Ok(())
    };
    match &cli.command {
        Command::Ingest(a) => stage(Stage::Ingest, a),
        Command::Contrib(a) => stage(Stage::Contrib, a),
        Command::Select(a) => stage(Stage::Select, a),
        Command::Net(a) => stage(Stage::Net, a),
        Command::Centrality(a) => stage(Stage::Centrality, a),
        Command::Score(a) => stage(Stage::Score, a),
        Command::Eval(a) => stage(Stage::Eval, a),
        Command::All(a) => {
            let cfg = a.resolve()?;
            pipeline::run_all(&cfg)?;
            println!(
                "{}",
                cfg.paths.workdir.join(pipeline::REPORT_FILE).display()
            );
            Ok(())
        }
        Command::Matrix(a) => {
            let path = pipeline::run_matrix(&a.resolve()?)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Synth(a) => synth(a),
        Command::Diff { a, b } => diff(a, b),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(USAGE_ERROR),
                _ => ExitCode::from(DATA_ERROR),
            }
        }
    }
}
