//! End-to-end orchestration: ingest, preprocess, sentiment, toxicity, topics,
//! vectorize, recommend, coverage.
//!
//! Output directory layout:
//!
//! | file                      | contents                                           |
//! |---------------------------|----------------------------------------------------|
//! | `report.json`             | distributions, topic selection, coverage          |
//! | `resolved_config.json`    | the fully resolved configuration                   |
//! | `profiles.csv`            | per-video sentiment, toxicity and dominant topic   |
//! | `recommendations.csv`     | `query_id,rank,rec_id,similarity`                  |
//! | `coverage_by_size.csv`    | `k,covered,total,coverage`                         |
//! | `coverage_monthly.csv`    | `month,covered,total,coverage`                     |
//! | `coverage_cumulative.csv` | `processed,covered,coverage`                       |
//! | `topics_top_terms.csv`    | `topic,rank,term,weight`                           |
//! | `topic_selection.csv`     | `topics,mean_log_likelihood,fold,fold_log_likelihood` |
//! | `lda_model.txt`           | fitted topic model                                 |
//! | `timings.json`            | wall-clock seconds per stage (not reproducible)    |
//!
//! Every file except `timings.json` is a pure function of the corpus bytes
//! and the resolved configuration.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus, month_buckets, Corpus, LoadOptions};
use crate::coverage::{coverage_report, CoverageReport, MonthlyMode};
use crate::error::{Error, Result};
use crate::seeds;
use crate::sentiment::{self, SentimentClass, SentimentDistribution, SentimentLexicon, SentimentThresholds};
use crate::simrec::{
    tfidf_vectorize, write_recommendations, AttributeProfile, FilterMode, RecommendationSet, Recommender,
};
use crate::textprep::{build_vocabulary, tokenize, PrepOptions, TokenStream};
use crate::topics::{count_vectorize, fit_lda, select_topic_count, LdaModel, LdaParams, SelectionSettings, TopicCountSelection};
use crate::toxicity::{
    self, classify_toxicity, load_external_scores, score_toxicity_lexicon, ToxicityClass, ToxicityDistribution,
    ToxicityLexicon,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopicCountRepr", into = "TopicCountRepr")]
pub enum TopicCount {
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TopicCountRepr {
    Number(usize),
    Text(String),
}

impl TryFrom<TopicCountRepr> for TopicCount {
    type Error = Error;

    fn try_from(r: TopicCountRepr) -> Result<Self> {
        match r {
            TopicCountRepr::Number(0) => Err(Error::Config("topic count must be >= 1".into())),
            TopicCountRepr::Number(k) => Ok(TopicCount::Fixed(k)),
            TopicCountRepr::Text(s) => s.parse(),
        }
    }
}

impl From<TopicCount> for TopicCountRepr {
    fn from(t: TopicCount) -> Self {
        match t {
            TopicCount::Auto => TopicCountRepr::Text("auto".into()),
            TopicCount::Fixed(k) => TopicCountRepr::Number(k),
        }
    }
}

impl std::str::FromStr for TopicCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(TopicCount::Auto),
            other => match other.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(TopicCount::Fixed(k)),
                _ => Err(Error::Config(format!("topic count must be `auto` or an integer >= 1, got `{other}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentimentConfig {
    pub lexicon: Option<PathBuf>,
    pub thresholds: SentimentThresholds,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        SentimentConfig {
            lexicon: None,
            thresholds: SentimentThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToxicityConfig {
    pub lexicon: Option<PathBuf>,
    /// Precomputed `video_id,score` table; preferred over the lexicon when non-empty.
    pub scores: Option<PathBuf>,
    pub threshold: f64,
}

impl Default for ToxicityConfig {
    fn default() -> Self {
        ToxicityConfig {
            lexicon: None,
            scores: None,
            threshold: toxicity::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicConfig {
    pub count: TopicCount,
    pub candidates: Vec<usize>,
    pub folds: usize,
    pub fold_in_sweeps: usize,
    pub iterations: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    /// Overrides the seed derived from the root seed.
    pub seed: Option<u64>,
    pub top_terms: usize,
}

impl Default for TopicConfig {
    fn default() -> Self {
        TopicConfig {
            count: TopicCount::Auto,
            candidates: (2..=10).collect(),
            folds: 5,
            fold_in_sweeps: 50,
            iterations: 500,
            alpha: None,
            beta: 0.01,
            seed: None,
            top_terms: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommendConfig {
    pub top_k: usize,
    pub filter_mode: FilterMode,
    /// List sizes for coverage by size.
    pub sizes: Vec<usize>,
    pub monthly_mode: MonthlyMode,
}

impl Default for RecommendConfig {
    fn default() -> Self {
        RecommendConfig {
            top_k: 5,
            filter_mode: FilterMode::TruncateFirst,
            sizes: vec![1, 5, 10],
            monthly_mode: MonthlyMode::CorpusWide,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub strict: bool,
    pub prep: PrepOptions,
    pub sentiment: SentimentConfig,
    pub toxicity: ToxicityConfig,
    pub topics: TopicConfig,
    pub recommend: RecommendConfig,
    pub seed: u64,
    // Where and how fast a run happens does not change its results, so these
    // are not echoed into the resolved config.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            strict: false,
            prep: PrepOptions::default(),
            sentiment: SentimentConfig::default(),
            toxicity: ToxicityConfig::default(),
            topics: TopicConfig::default(),
            recommend: RecommendConfig::default(),
            seed: 42,
            out: None,
            threads: None,
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML config file; missing keys keep their defaults.
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.prep.min_df < 1 || !(self.prep.max_df > 0.0 && self.prep.max_df <= 1.0) {
            return cfg(format!("invalid document-frequency bounds ({}, {})", self.prep.min_df, self.prep.max_df));
        }
        self.sentiment.thresholds.validate()?;
        toxicity::validate_threshold(self.toxicity.threshold)?;
        if self.topics.count == TopicCount::Auto && self.topics.candidates.iter().all(|&k| k == 0) {
            return cfg("topic candidates must contain a value >= 1".into());
        }
        if self.topics.iterations < 1 || self.topics.top_terms < 1 {
            return cfg("topic iterations and top_terms must be >= 1".into());
        }
        if self.recommend.top_k < 1 || self.recommend.sizes.is_empty() || self.recommend.sizes.contains(&0) {
            return cfg("recommendation sizes must be >= 1".into());
        }
        if self.threads == Some(0) {
            return cfg("threads must be >= 1".into());
        }
        Ok(())
    }

    pub fn corpus_path(&self) -> Result<&Path> {
        self.corpus
            .as_deref()
            .ok_or_else(|| Error::Config("no corpus path given".into()))
    }

    fn lda_seed(&self) -> u64 {
        self.topics.seed.unwrap_or_else(|| seeds::derive(self.seed, "lda"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoProfile {
    pub video_id: String,
    pub compound: f64,
    pub sentiment: SentimentClass,
    pub toxicity_score: f64,
    pub toxicity: ToxicityClass,
    pub topic: usize,
}

impl VideoProfile {
    pub fn attributes(&self) -> AttributeProfile {
        AttributeProfile {
            sentiment: self.sentiment,
            toxicity: self.toxicity,
            topic: self.topic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub videos: usize,
    pub rejected_rows: usize,
    pub months: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToxicitySummary {
    pub source: String,
    pub threshold: f64,
    pub distribution: ToxicityDistribution,
    /// Ids in the external score file that are not in the corpus.
    pub unknown_score_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicShare {
    pub topic: usize,
    pub videos: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topics: usize,
    pub vocabulary_size: usize,
    pub selection: Option<TopicCountSelection>,
    pub sizes: Vec<TopicShare>,
    pub top_terms: Vec<Vec<WeightedTerm>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorSummary {
    pub vocabulary_size: usize,
    pub zero_vectors: usize,
    pub mean_nonzeros: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationSummary {
    pub k: usize,
    pub filter_mode: FilterMode,
    pub total_items: usize,
    pub empty_sets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Output of the analysis stages (sentiment, toxicity, topics).
#[derive(Debug, Clone)]
pub struct Analysis {
    pub profiles: Vec<VideoProfile>,
    pub sentiment: SentimentDistribution,
    pub toxicity: ToxicitySummary,
    pub topics: TopicSummary,
    pub model: LdaModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub corpus: CorpusSummary,
    pub sentiment: SentimentDistribution,
    pub toxicity: ToxicitySummary,
    pub topics: TopicSummary,
    pub vectors: VectorSummary,
    pub recommendations: RecommendationSummary,
    pub coverage: CoverageReport,
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

struct Timer(Vec<StageTiming>);

impl Timer {
    fn stage<T>(&mut self, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(name));
        self.0.push(StageTiming {
            stage: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

pub fn ingest(config: &PipelineConfig) -> Result<(Corpus, usize)> {
    let report = load_corpus(config.corpus_path()?, &LoadOptions { strict: config.strict })?;
    Ok((report.corpus, report.rejected.len()))
}

fn description_streams(corpus: &Corpus, prep: &PrepOptions) -> Vec<TokenStream> {
    corpus.records().par_iter().map(|r| tokenize(&r.description, prep)).collect()
}

fn combined_streams(corpus: &Corpus, prep: &PrepOptions) -> Vec<TokenStream> {
    corpus.records().par_iter().map(|r| tokenize(&r.combined_text(), prep)).collect()
}

fn sentiment_stage(config: &PipelineConfig, streams: &[TokenStream]) -> Result<Vec<sentiment::SentimentResult>> {
    let lexicon = match &config.sentiment.lexicon {
        Some(p) => SentimentLexicon::load(p)?,
        None => SentimentLexicon::bundled(),
    };
    let thresholds = config.sentiment.thresholds;
    streams
        .par_iter()
        .map(|s| sentiment::analyze(s, &lexicon, &thresholds))
        .collect()
}

fn toxicity_stage(
    config: &PipelineConfig,
    corpus: &Corpus,
    streams: &[TokenStream],
) -> Result<(Vec<toxicity::ToxicityResult>, String, Vec<String>)> {
    let threshold = config.toxicity.threshold;
    let external = match &config.toxicity.scores {
        Some(p) => load_external_scores(p)?,
        None => Default::default(),
    };
    let (scores, source, unknown) = if external.is_empty() {
        let lexicon = match &config.toxicity.lexicon {
            Some(p) => ToxicityLexicon::load(p)?,
            None => ToxicityLexicon::bundled(),
        };
        let scores: Vec<f64> = streams.par_iter().map(|s| score_toxicity_lexicon(s, &lexicon)).collect();
        (scores, "lexicon", Vec::new())
    } else {
        let scores = corpus
            .iter()
            .map(|r| {
                external.get(&r.video_id).ok_or_else(|| {
                    Error::Data(format!("no external toxicity score for video `{}`", r.video_id))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let unknown = external
            .unknown_ids(|id| corpus.get(id).is_some())
            .into_iter()
            .map(str::to_string)
            .collect();
        (scores, "external", unknown)
    };
    let results = scores
        .into_iter()
        .map(|score| {
            Ok(toxicity::ToxicityResult {
                score,
                class: classify_toxicity(score, threshold)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((results, source.to_string(), unknown))
}

fn topic_stage(config: &PipelineConfig, corpus: &Corpus, streams: &[TokenStream]) -> Result<(TopicSummary, LdaModel)> {
    let filter = config.prep.vocabulary_filter()?;
    let vocab = build_vocabulary(streams.iter().map(|s| s.tokens.as_slice()), &filter)?;
    let matrix = count_vectorize(streams.iter().map(|s| s.tokens.as_slice()), &vocab).with_doc_ids(corpus.ids())?;
    let tc = &config.topics;
    let (k, selection) = match tc.count {
        TopicCount::Fixed(k) => (k, None),
        TopicCount::Auto => {
            let settings = SelectionSettings {
                folds: tc.folds,
                fold_in_sweeps: tc.fold_in_sweeps,
                iterations: tc.iterations,
                alpha: tc.alpha,
                beta: tc.beta,
            };
            let sel = select_topic_count(&matrix, &tc.candidates, &settings, seeds::derive(config.seed, "cv"))?;
            (sel.best, Some(sel))
        }
    };
    let params = LdaParams {
        topics: k,
        alpha: tc.alpha,
        beta: tc.beta,
        iterations: tc.iterations,
        seed: config.lda_seed(),
    };
    let model = fit_lda(&matrix, &params)?;
    let dominant = model.dominant_topics();
    let sizes = (0..k)
        .map(|t| {
            let videos = dominant.iter().filter(|&&d| d == t).count();
            TopicShare {
                topic: t,
                videos,
                percent: if dominant.is_empty() { 0.0 } else { videos as f64 * 100.0 / dominant.len() as f64 },
            }
        })
        .collect();
    let top_terms = (0..k)
        .map(|t| {
            Ok(model
                .top_terms(t, tc.top_terms)?
                .into_iter()
                .map(|(term, weight)| WeightedTerm { term, weight })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        TopicSummary {
            topics: k,
            vocabulary_size: vocab.len(),
            selection,
            sizes,
            top_terms,
        },
        model,
    ))
}

/// Sentiment, toxicity and topic stages over a loaded corpus.
pub fn analyze(config: &PipelineConfig, corpus: &Corpus) -> Result<Analysis> {
    let mut timer = Timer(Vec::new());
    analyze_timed(config, corpus, &mut timer)
}

fn analyze_timed(config: &PipelineConfig, corpus: &Corpus, timer: &mut Timer) -> Result<Analysis> {
    let streams = timer.stage("preprocess", || Ok(description_streams(corpus, &config.prep)))?;
    let sent = timer.stage("sentiment", || sentiment_stage(config, &streams))?;
    let (tox, source, unknown) = timer.stage("toxicity", || toxicity_stage(config, corpus, &streams))?;
    let (topics, model) = timer.stage("topics", || topic_stage(config, corpus, &streams))?;
    let dominant = model.dominant_topics();
    let profiles: Vec<VideoProfile> = corpus
        .iter()
        .enumerate()
        .map(|(i, r)| VideoProfile {
            video_id: r.video_id.clone(),
            compound: sent[i].compound,
            sentiment: sent[i].class,
            toxicity_score: tox[i].score,
            toxicity: tox[i].class,
            topic: dominant[i],
        })
        .collect();
    Ok(Analysis {
        sentiment: sentiment::sentiment_distribution(profiles.iter().map(|p| p.sentiment)),
        toxicity: ToxicitySummary {
            source,
            threshold: config.toxicity.threshold,
            distribution: toxicity::toxicity_distribution(profiles.iter().map(|p| p.toxicity)),
            unknown_score_ids: unknown,
        },
        profiles,
        topics,
        model,
    })
}

/// TF-IDF over title + description, indexed with the given profiles.
pub fn build_recommender(
    config: &PipelineConfig,
    corpus: &Corpus,
    profiles: &[VideoProfile],
) -> Result<(Recommender, VectorSummary)> {
    if profiles.len() != corpus.len() {
        return Err(Error::DimensionMismatch {
            left: profiles.len(),
            right: corpus.len(),
        });
    }
    for (p, r) in profiles.iter().zip(corpus.iter()) {
        if p.video_id != r.video_id {
            return Err(Error::Data(format!(
                "profile order does not match corpus: `{}` vs `{}`",
                p.video_id, r.video_id
            )));
        }
    }
    let streams = combined_streams(corpus, &config.prep);
    let filter = config.prep.vocabulary_filter()?;
    let vocab = build_vocabulary(streams.iter().map(|s| s.tokens.as_slice()), &filter)?;
    let matrix = count_vectorize(streams.iter().map(|s| s.tokens.as_slice()), &vocab);
    let vectors = tfidf_vectorize(&matrix, &vocab)?;
    let summary = VectorSummary {
        vocabulary_size: vocab.len(),
        zero_vectors: vectors.iter().filter(|v| v.is_zero()).count(),
        mean_nonzeros: if vectors.is_empty() {
            0.0
        } else {
            vectors.iter().map(|v| v.nnz()).sum::<usize>() as f64 / vectors.len() as f64
        },
    };
    let rec = Recommender::new(corpus.ids(), vectors, profiles.iter().map(VideoProfile::attributes).collect())?;
    Ok((rec, summary))
}

pub fn recommendation_summary(sets: &[RecommendationSet], k: usize, mode: FilterMode) -> RecommendationSummary {
    RecommendationSummary {
        k,
        filter_mode: mode,
        total_items: sets.iter().map(RecommendationSet::len).sum(),
        empty_sets: sets.iter().filter(|s| s.is_empty()).count(),
    }
}

/// Runs every stage and writes all artifacts to `config.out` when it is set.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    config.validate()?;
    let mut timer = Timer(Vec::new());
    let (corpus, rejected) = timer.stage("ingest", || ingest(config))?;
    if corpus.is_empty() {
        return Err(Error::Data("corpus has no valid records".into()).in_stage("ingest"));
    }
    let analysis = analyze_timed(config, &corpus, &mut timer)?;
    let (recommender, vectors) = timer.stage("vectorize", || build_recommender(config, &corpus, &analysis.profiles))?;
    let rc = &config.recommend;
    let sets = timer.stage("recommend", || recommender.recommend_all(rc.top_k, rc.filter_mode))?;
    let coverage = timer.stage("coverage", || {
        coverage_report(&recommender, &sets, rc.top_k, &corpus, &rc.sizes, rc.filter_mode, rc.monthly_mode)
    })?;
    let report = RunReport {
        config: config.clone(),
        corpus: CorpusSummary {
            videos: corpus.len(),
            rejected_rows: rejected,
            months: month_buckets(&corpus).len(),
        },
        sentiment: analysis.sentiment,
        toxicity: analysis.toxicity.clone(),
        topics: analysis.topics.clone(),
        vectors,
        recommendations: recommendation_summary(&sets, rc.top_k, rc.filter_mode),
        coverage,
        timings: Vec::new(),
    };
    let mut report = report;
    if let Some(out) = &config.out {
        timer.stage("write", || write_outputs(out, &report, &analysis, &sets))?;
    }
    report.timings = timer.0;
    if let Some(out) = &config.out {
        write_json(&out.join("timings.json"), &report.timings)?;
    }
    check_report(&report)?;
    Ok(report)
}

/// Cross-stage invariants a finished run must satisfy.
fn check_report(report: &RunReport) -> Result<()> {
    let n = report.corpus.videos;
    if report.sentiment.total != n || report.toxicity.distribution.total != n {
        return Err(Error::Invariant("class counts do not sum to corpus size".into()));
    }
    if report.topics.sizes.iter().map(|s| s.videos).sum::<usize>() != n {
        return Err(Error::Invariant("topic sizes do not sum to corpus size".into()));
    }
    let c = &report.coverage;
    if c.cumulative.last().map(|p| p.coverage) != Some(c.aggregate) {
        return Err(Error::Invariant("final cumulative coverage differs from aggregate".into()));
    }
    if crate::coverage::size_weighted_mean(&c.monthly) != c.aggregate
        && report.config.recommend.monthly_mode == MonthlyMode::CorpusWide
    {
        return Err(Error::Invariant("monthly coverage does not average to aggregate".into()));
    }
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

pub fn write_outputs(out: &Path, report: &RunReport, analysis: &Analysis, sets: &[RecommendationSet]) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_json(&out.join("report.json"), report)?;
    write_json(&out.join("resolved_config.json"), &report.config)?;
    write_analysis_outputs(out, analysis)?;
    write_recommendations(sets, create(&out.join("recommendations.csv"))?)?;
    write_coverage_tables(out, &report.coverage)
}

pub fn write_analysis_outputs(out: &Path, analysis: &Analysis) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_profiles(&analysis.profiles, create(&out.join("profiles.csv"))?)?;
    write_top_terms(&analysis.topics, create(&out.join("topics_top_terms.csv"))?)?;
    if let Some(sel) = &analysis.topics.selection {
        let mut w = csv::Writer::from_writer(create(&out.join("topic_selection.csv"))?);
        w.write_record(["topics", "mean_log_likelihood", "fold", "fold_log_likelihood"])?;
        for s in &sel.scores {
            for (f, ll) in s.fold_log_likelihoods.iter().enumerate() {
                w.write_record([
                    s.topics.to_string(),
                    s.mean_log_likelihood.to_string(),
                    f.to_string(),
                    ll.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(out, e))?;
    }
    analysis.model.save(&out.join("lda_model.txt"))
}

pub fn write_coverage_tables(out: &Path, c: &CoverageReport) -> Result<()> {
    let flush = |e: std::io::Error| Error::io(out, e);

    let mut w = csv::Writer::from_writer(create(&out.join("coverage_by_size.csv"))?);
    w.write_record(["k", "covered", "total", "coverage"])?;
    for s in &c.by_size {
        w.write_record([s.k.to_string(), s.covered.to_string(), c.total.to_string(), s.coverage.to_string()])?;
    }
    w.flush().map_err(flush)?;

    let mut w = csv::Writer::from_writer(create(&out.join("coverage_monthly.csv"))?);
    w.write_record(["month", "covered", "total", "coverage"])?;
    for m in &c.monthly {
        w.write_record([m.month.to_string(), m.covered.to_string(), m.total.to_string(), m.coverage.to_string()])?;
    }
    w.flush().map_err(flush)?;

    let mut w = csv::Writer::from_writer(create(&out.join("coverage_cumulative.csv"))?);
    w.write_record(["processed", "covered", "coverage"])?;
    for p in &c.cumulative {
        w.write_record([p.processed.to_string(), p.covered.to_string(), p.coverage.to_string()])?;
    }
    w.flush().map_err(flush)
}

fn write_top_terms<W: Write>(topics: &TopicSummary, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["topic", "rank", "term", "weight"])?;
    for (t, terms) in topics.top_terms.iter().enumerate() {
        for (i, wt) in terms.iter().enumerate() {
            w.write_record([t.to_string(), (i + 1).to_string(), wt.term.clone(), wt.weight.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<top terms>", e))?;
    Ok(())
}

pub fn write_profiles<W: Write>(profiles: &[VideoProfile], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["video_id", "compound", "sentiment", "toxicity_score", "toxicity", "topic"])?;
    for p in profiles {
        w.write_record([
            p.video_id.clone(),
            p.compound.to_string(),
            p.sentiment.as_str().to_string(),
            p.toxicity_score.to_string(),
            p.toxicity.as_str().to_string(),
            p.topic.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<profiles>", e))?;
    Ok(())
}

pub fn read_profiles<R: Read>(reader: R) -> Result<Vec<VideoProfile>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let row_no = i + 2;
        let field = |c: usize| row.get(c).unwrap_or("");
        let num = |c: usize, name: &str| -> Result<f64> {
            field(c)
                .parse()
                .map_err(|_| Error::row(row_no, name, format!("bad number `{}`", field(c))))
        };
        out.push(VideoProfile {
            video_id: field(0).to_string(),
            compound: num(1, "compound")?,
            sentiment: field(2).parse().map_err(|e: Error| Error::row(row_no, "sentiment", e.to_string()))?,
            toxicity_score: num(3, "toxicity_score")?,
            toxicity: field(4).parse().map_err(|e: Error| Error::row(row_no, "toxicity", e.to_string()))?,
            topic: field(5)
                .parse()
                .map_err(|_| Error::row(row_no, "topic", format!("bad topic `{}`", field(5))))?,
        });
    }
    Ok(out)
}

/// Reorders loaded profiles to corpus order; every corpus video needs exactly one profile.
pub fn align_profiles(corpus: &Corpus, profiles: Vec<VideoProfile>) -> Result<Vec<VideoProfile>> {
    let mut by_id: BTreeMap<String, VideoProfile> = BTreeMap::new();
    for p in profiles {
        let id = p.video_id.clone();
        if by_id.insert(id.clone(), p).is_some() {
            return Err(Error::Data(format!("duplicate profile for `{id}`")));
        }
    }
    let aligned = corpus
        .iter()
        .map(|r| by_id.remove(&r.video_id).ok_or_else(|| Error::UnknownVideo(r.video_id.clone())))
        .collect::<Result<Vec<_>>>()?;
    if let Some(id) = by_id.keys().next() {
        return Err(Error::UnknownVideo(id.clone()));
    }
    Ok(aligned)
}
