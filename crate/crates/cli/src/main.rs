use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vidrec::coverage::{coverage_report, MonthlyMode};
use vidrec::pipeline::{self, PipelineConfig, TopicCount};
use vidrec::sentiment::SentimentThresholds;
use vidrec::simrec::{read_recommendations, write_recommendations, FilterMode};
use vidrec::synth::{generate_synthetic, write_synthetic, SynthParams};
use vidrec::{Error, Result};

const DEFAULT_OUT: &str = "vidrec-out";

#[derive(Parser, Debug)]
#[command(name = "vidrec", version, about = "Content analysis and recommendation coverage for video metadata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate and load a corpus file
    Ingest(Common),
    /// Sentiment, toxicity and topic stages; writes profiles.csv
    Analyze(Common),
    /// Recommendations from profiles.csv (analyzes first if it is missing)
    Recommend(RecommendArgs),
    /// Coverage tables from recommendations.csv and profiles.csv
    Coverage(CoverageArgs),
    /// Every stage end to end
    Run(Common),
    /// Write a synthetic corpus with a truth sidecar
    Synth(SynthArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Input corpus CSV
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Abort on the first malformed row
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    min_df: Option<usize>,
    #[arg(long)]
    max_df: Option<f64>,
    /// Stopword file, one word per line
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Sentiment lexicon (term<TAB>valence)
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Sentiment class thresholds as `positive,negative`
    #[arg(long, value_parser = parse_thresholds, allow_hyphen_values = true)]
    sent_thresholds: Option<SentimentThresholds>,
    /// Precomputed toxicity scores (video_id,score)
    #[arg(long)]
    tox_scores: Option<PathBuf>,
    /// Toxicity lexicon (term<TAB>weight)
    #[arg(long)]
    tox_lexicon: Option<PathBuf>,
    #[arg(long)]
    tox_threshold: Option<f64>,
    /// `auto` or a fixed topic count
    #[arg(long)]
    topics: Option<TopicCount>,
    /// Candidate topic counts, `2..10` or `2,3,5`
    #[arg(long, value_parser = parse_usize_list)]
    topic_candidates: Option<UsizeList>,
    #[arg(long)]
    lda_iters: Option<usize>,
    #[arg(long)]
    lda_seed: Option<u64>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Recommendation list sizes for coverage by size, e.g. `1,5,10`
    #[arg(long, value_parser = parse_usize_list)]
    sizes: Option<UsizeList>,
    /// truncate-first | filter-first | unfiltered
    #[arg(long)]
    filter_mode: Option<FilterMode>,
    /// corpus-wide | within-month
    #[arg(long)]
    monthly_mode: Option<MonthlyMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct RecommendArgs {
    #[command(flatten)]
    common: Common,
    /// Profiles from a previous `analyze` (default: <out>/profiles.csv)
    #[arg(long)]
    profiles: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CoverageArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Recommendations from a previous `recommend` (default: <out>/recommendations.csv)
    #[arg(long)]
    recommendations: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    videos: usize,
    #[arg(long, default_value_t = 2)]
    topics: usize,
    /// Positive, neutral, negative proportions
    #[arg(long, default_value = "0.5,0.35,0.15")]
    sentiment_mix: String,
    #[arg(long, default_value_t = 0.01)]
    toxic_fraction: f64,
    #[arg(long, default_value_t = 40)]
    mean_tokens: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output corpus CSV; the truth file is written next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone)]
struct UsizeList(Vec<usize>);

fn parse_usize_list(s: &str) -> std::result::Result<UsizeList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
        if a > b {
            return Err(format!("empty range `{s}`"));
        }
        return Ok(UsizeList((a..=b).collect()));
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("bad integer `{p}`")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(UsizeList)
}

fn parse_floats(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("bad number `{p}`")))
        .collect()
}

fn parse_thresholds(s: &str) -> std::result::Result<SentimentThresholds, String> {
    match parse_floats(s)?.as_slice() {
        &[p, n] => SentimentThresholds::new(p, n).map_err(|e| e.to_string()),
        _ => Err("expected `positive,negative`".into()),
    }
}

fn resolve(c: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::from_toml_file(p)?,
        None => PipelineConfig::default(),
    };
    macro_rules! set {
        ($src:expr => $dst:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    if c.corpus.is_some() {
        cfg.corpus = c.corpus.clone();
    }
    cfg.strict |= c.strict;
    set!(c.min_df => cfg.prep.min_df);
    set!(c.max_df => cfg.prep.max_df);
    if c.stopwords.is_some() {
        cfg.prep.stopwords = c.stopwords.clone();
    }
    if c.lexicon.is_some() {
        cfg.sentiment.lexicon = c.lexicon.clone();
    }
    set!(c.sent_thresholds => cfg.sentiment.thresholds);
    if c.tox_scores.is_some() {
        cfg.toxicity.scores = c.tox_scores.clone();
    }
    if c.tox_lexicon.is_some() {
        cfg.toxicity.lexicon = c.tox_lexicon.clone();
    }
    set!(c.tox_threshold => cfg.toxicity.threshold);
    set!(c.topics => cfg.topics.count);
    if let Some(l) = &c.topic_candidates {
        cfg.topics.candidates = l.0.clone();
    }
    set!(c.lda_iters => cfg.topics.iterations);
    if c.lda_seed.is_some() {
        cfg.topics.seed = c.lda_seed;
    }
    set!(c.top_k => cfg.recommend.top_k);
    if let Some(l) = &c.sizes {
        cfg.recommend.sizes = l.0.clone();
    }
    set!(c.filter_mode => cfg.recommend.filter_mode);
    set!(c.monthly_mode => cfg.recommend.monthly_mode);
    set!(c.seed => cfg.seed);
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        // Fails only if a pool already exists, which cannot happen in a fresh process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(cfg)
}

fn out_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn cmd_ingest(c: &Common) -> Result<()> {
    let cfg = resolve(c)?;
    let report = vidrec::load_corpus(cfg.corpus_path()?, &vidrec::LoadOptions { strict: cfg.strict })?;
    for e in &report.rejected {
        eprintln!("rejected: {e}");
    }
    let months = vidrec::corpus::month_buckets(&report.corpus).len();
    if let Some(out) = &cfg.out {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        report.corpus.save(out.join("corpus.csv"))?;
    }
    print_json(&pipeline::CorpusSummary {
        videos: report.corpus.len(),
        rejected_rows: report.rejected.len(),
        months,
    })
}

fn cmd_analyze(c: &Common) -> Result<()> {
    let mut cfg = resolve(c)?;
    cfg.out = Some(out_dir(&cfg));
    let out = out_dir(&cfg);
    let (corpus, _) = pipeline::ingest(&cfg).map_err(|e| e.in_stage("ingest"))?;
    let analysis = pipeline::analyze(&cfg, &corpus)?;
    pipeline::write_analysis_outputs(&out, &analysis)?;
    pipeline::write_json(&out.join("resolved_config.json"), &cfg)?;
    print_json(&serde_json::json!({
        "videos": corpus.len(),
        "sentiment": analysis.sentiment,
        "toxicity": analysis.toxicity,
        "topics": analysis.topics,
    }))
}

fn load_profiles(
    cfg: &PipelineConfig,
    corpus: &vidrec::Corpus,
    path: Option<&Path>,
) -> Result<Vec<pipeline::VideoProfile>> {
    let default = out_dir(cfg).join("profiles.csv");
    let path = path.unwrap_or(&default);
    if !path.exists() && path == default {
        let analysis = pipeline::analyze(cfg, corpus)?;
        pipeline::write_analysis_outputs(&out_dir(cfg), &analysis)?;
        return Ok(analysis.profiles);
    }
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    pipeline::align_profiles(corpus, pipeline::read_profiles(f)?)
}

fn cmd_recommend(a: &RecommendArgs) -> Result<()> {
    let cfg = resolve(&a.common)?;
    let out = out_dir(&cfg);
    let (corpus, _) = pipeline::ingest(&cfg).map_err(|e| e.in_stage("ingest"))?;
    let profiles = load_profiles(&cfg, &corpus, a.profiles.as_deref())?;
    let (rec, vectors) =
        pipeline::build_recommender(&cfg, &corpus, &profiles).map_err(|e| e.in_stage("vectorize"))?;
    let rc = &cfg.recommend;
    let sets = rec.recommend_all(rc.top_k, rc.filter_mode).map_err(|e| e.in_stage("recommend"))?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let path = out.join("recommendations.csv");
    let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_recommendations(&sets, std::io::BufWriter::new(f))?;
    print_json(&serde_json::json!({
        "vectors": vectors,
        "recommendations": pipeline::recommendation_summary(&sets, rc.top_k, rc.filter_mode),
    }))
}

fn cmd_coverage(a: &CoverageArgs) -> Result<()> {
    let cfg = resolve(&a.common)?;
    let out = out_dir(&cfg);
    let (corpus, _) = pipeline::ingest(&cfg).map_err(|e| e.in_stage("ingest"))?;
    let profiles = load_profiles(&cfg, &corpus, a.profiles.as_deref())?;
    let (rec, _) = pipeline::build_recommender(&cfg, &corpus, &profiles).map_err(|e| e.in_stage("vectorize"))?;
    let rc = &cfg.recommend;
    let rec_path = a.recommendations.clone().unwrap_or_else(|| out.join("recommendations.csv"));
    let sets = if rec_path.exists() {
        let f = std::fs::File::open(&rec_path).map_err(|e| Error::io(&rec_path, e))?;
        read_recommendations(f, &corpus.ids(), rc.top_k)?
    } else {
        rec.recommend_all(rc.top_k, rc.filter_mode)?
    };
    let report = coverage_report(&rec, &sets, rc.top_k, &corpus, &rc.sizes, rc.filter_mode, rc.monthly_mode)
        .map_err(|e| e.in_stage("coverage"))?;
    pipeline::write_coverage_tables(&out, &report)?;
    pipeline::write_json(&out.join("coverage.json"), &report)?;
    print_json(&serde_json::json!({
        "k": report.k,
        "aggregate": report.aggregate,
        "by_size": report.by_size,
    }))
}

fn cmd_run(c: &Common) -> Result<()> {
    let mut cfg = resolve(c)?;
    cfg.out = Some(out_dir(&cfg));
    let report = pipeline::run_pipeline(&cfg)?;
    let cov = &report.coverage;
    println!("videos: {}", report.corpus.videos);
    let s = &report.sentiment;
    for (name, share) in [("positive", s.positive), ("neutral", s.neutral), ("negative", s.negative)] {
        println!("sentiment {name}: {:.2}%", share.percent);
    }
    println!(
        "toxic: {} ({:.2}%)",
        report.toxicity.distribution.toxic.count, report.toxicity.distribution.toxic.percent
    );
    println!("topics: {}", report.topics.topics);
    println!("coverage@{}: {:.4}", cov.k, cov.aggregate);
    for s in &cov.by_size {
        println!("coverage@{}: {:.4}", s.k, s.coverage);
    }
    for t in &report.timings {
        eprintln!("{:<10} {:>8.3}s", t.stage, t.seconds);
    }
    println!("outputs: {}", out_dir(&cfg).display());
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let mix = parse_floats(&a.sentiment_mix).map_err(Error::Config)?;
    let mix: [f64; 3] = mix
        .try_into()
        .map_err(|_| Error::Config("sentiment mix needs three values".into()))?;
    let params = SynthParams {
        videos: a.videos,
        topics: a.topics,
        sentiment_mix: mix,
        toxic_fraction: a.toxic_fraction,
        mean_tokens: a.mean_tokens,
        ..SynthParams::default()
    };
    let synth = generate_synthetic(&params, a.seed)?;
    let truth = write_synthetic(&synth, &a.out)?;
    println!("{} videos -> {} (truth: {})", synth.corpus.len(), a.out.display(), truth.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Ingest(c) => cmd_ingest(c),
        Command::Analyze(c) => cmd_analyze(c),
        Command::Recommend(a) => cmd_recommend(a),
        Command::Coverage(a) => cmd_coverage(a),
        Command::Run(c) => cmd_run(c),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
