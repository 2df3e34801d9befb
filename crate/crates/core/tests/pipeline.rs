mod common;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use vidrec::coverage::aggregate_coverage;
use vidrec::pipeline::{self, PipelineConfig, TopicCount};
use vidrec::simrec::{read_recommendations, FilterMode};
use vidrec::synth::topic_vocabulary;
use vidrec::topics::LdaModel;
use vidrec::{load_corpus, Error, LoadOptions};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn config(corpus: &str, out: Option<&Path>) -> PipelineConfig {
    PipelineConfig {
        corpus: Some(data(corpus)),
        out: out.map(Path::to_path_buf),
        ..PipelineConfig::default()
    }
}

#[test]
fn demo_corpus_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let report = pipeline::run_pipeline(&config("demo_12.csv", Some(tmp.path()))).unwrap();
    assert_eq!(report.corpus.videos, 12);
    assert_eq!(report.sentiment.total, 12);
    assert_eq!(
        report.sentiment.positive.count + report.sentiment.neutral.count + report.sentiment.negative.count,
        12
    );
    assert_eq!(report.toxicity.distribution.toxic.count + report.toxicity.distribution.non_toxic.count, 12);
    assert_eq!(report.toxicity.distribution.toxic.count, 1);
    assert_eq!(report.topics.sizes.iter().map(|s| s.videos).sum::<usize>(), 12);
    assert!(report.topics.selection.is_some());
    assert_eq!(report.topics.top_terms.len(), report.topics.topics);
    let c = &report.coverage;
    assert_eq!(c.by_size.iter().map(|s| s.k).collect::<Vec<_>>(), vec![1, 5, 10]);
    assert!(!c.monthly.is_empty());
    assert_eq!(c.cumulative.len(), 12);
    for v in std::iter::once(c.aggregate)
        .chain(c.monthly.iter().map(|m| m.coverage))
        .chain(c.cumulative.iter().map(|p| p.coverage))
        .chain(c.by_size.iter().map(|s| s.coverage))
    {
        assert!((0.0..=1.0).contains(&v));
    }
    assert!(!report.timings.is_empty());
    for f in [
        "report.json",
        "resolved_config.json",
        "profiles.csv",
        "recommendations.csv",
        "coverage_by_size.csv",
        "coverage_monthly.csv",
        "coverage_cumulative.csv",
        "topics_top_terms.csv",
        "topic_selection.csv",
        "lda_model.txt",
        "timings.json",
    ] {
        assert!(tmp.path().join(f).is_file(), "missing {f}");
    }
    let report_json = std::fs::read_to_string(tmp.path().join("report.json")).unwrap();
    assert!(!report_json.contains("seconds"));
}

#[test]
fn artifacts_reload() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("demo_12.csv", Some(tmp.path()));
    pipeline::run_pipeline(&cfg).unwrap();
    let corpus = load_corpus(data("demo_12.csv"), &LoadOptions::default()).unwrap().corpus;

    let profiles = pipeline::read_profiles(std::fs::File::open(tmp.path().join("profiles.csv")).unwrap()).unwrap();
    let profiles = pipeline::align_profiles(&corpus, profiles).unwrap();
    let analysis = pipeline::analyze(&cfg, &corpus).unwrap();
    assert_eq!(profiles, analysis.profiles);

    let (rec, _) = pipeline::build_recommender(&cfg, &corpus, &profiles).unwrap();
    let sets = rec.recommend_all(cfg.recommend.top_k, cfg.recommend.filter_mode).unwrap();
    let reloaded = read_recommendations(
        std::fs::File::open(tmp.path().join("recommendations.csv")).unwrap(),
        &corpus.ids(),
        cfg.recommend.top_k,
    )
    .unwrap();
    assert_eq!(reloaded, sets);

    let model = LdaModel::load(&tmp.path().join("lda_model.txt")).unwrap();
    assert_eq!(model.dominant_topics(), profiles.iter().map(|p| p.topic).collect::<Vec<_>>());

    let resolved: PipelineConfig =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(resolved, PipelineConfig { out: None, ..cfg });
}

#[test]
fn same_config_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    for run in ["a", "b"] {
        pipeline::run_pipeline(&config("demo_12.csv", Some(&tmp.path().join(run)))).unwrap();
    }
    for f in ["report.json", "profiles.csv", "recommendations.csv", "coverage_cumulative.csv", "lda_model.txt"] {
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(f)).unwrap(),
            std::fs::read(tmp.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn different_seed_can_change_topics_but_not_text_stages() {
    let a = pipeline::run_pipeline(&config("demo_12.csv", None)).unwrap();
    let b = pipeline::run_pipeline(&PipelineConfig { seed: 7, ..config("demo_12.csv", None) }).unwrap();
    assert_eq!(a.sentiment, b.sentiment);
    assert_eq!(a.toxicity, b.toxicity);
    assert_eq!(a.vectors, b.vectors);
}

#[test]
fn bundled_synthetic_selects_two_topics_and_filter_lowers_coverage() {
    let cfg = config("synthetic_500.csv", None);
    let report = pipeline::run_pipeline(&cfg).unwrap();
    assert_eq!(report.topics.topics, 2);
    for terms in &report.topics.top_terms {
        let planted: Vec<HashSet<String>> = (0..2).map(|t| topic_vocabulary(t).into_iter().collect()).collect();
        let hits = |t: usize| terms.iter().filter(|w| planted[t].contains(&w.term)).count();
        assert_eq!(hits(0).max(hits(1)), terms.len(), "{terms:?}");
    }

    let corpus = load_corpus(data("synthetic_500.csv"), &LoadOptions::default()).unwrap().corpus;
    let profiles = pipeline::align_profiles(
        &corpus,
        pipeline::analyze(&PipelineConfig { topics: vidrec::pipeline::TopicConfig { count: TopicCount::Fixed(2), ..Default::default() }, ..cfg.clone() }, &corpus)
            .unwrap()
            .profiles,
    )
    .unwrap();
    let (rec, _) = pipeline::build_recommender(&cfg, &corpus, &profiles).unwrap();
    let unfiltered = aggregate_coverage(&rec.recommend_all(5, FilterMode::Unfiltered).unwrap(), rec.len()).unwrap();
    assert!(report.coverage.aggregate < unfiltered, "{} vs {unfiltered}", report.coverage.aggregate);

    let truth = std::fs::read_to_string(data("synthetic_500.truth.csv")).unwrap();
    let toxic = truth.lines().skip(1).filter(|l| l.ends_with(",true")).count();
    assert_eq!(report.toxicity.distribution.toxic.count, toxic);
}

#[test]
fn stage_errors_name_the_stage() {
    let err = pipeline::run_pipeline(&config("does_not_exist.csv", None)).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "ingest", .. }), "{err}");
    assert!(err.to_string().contains("ingest"));
    assert_eq!(err.exit_code(), 2);

    let mut cfg = config("demo_12.csv", None);
    cfg.topics.count = TopicCount::Fixed(1);
    cfg.topics.candidates = vec![];
    cfg.prep.min_df = 50;
    let err = pipeline::run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "topics", .. }), "{err}");
}

#[test]
fn external_scores_take_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = load_corpus(data("demo_12.csv"), &LoadOptions::default()).unwrap().corpus;
    let scores: String = corpus
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{},{}\n", r.video_id, if i < 3 { 0.9 } else { 0.1 }))
        .collect();
    let path = tmp.path().join("scores.csv");
    std::fs::write(&path, format!("video_id,score\n{scores}ghost,0.5\n")).unwrap();
    let mut cfg = config("demo_12.csv", None);
    cfg.toxicity.scores = Some(path.clone());
    let report = pipeline::run_pipeline(&cfg).unwrap();
    assert_eq!(report.toxicity.source, "external");
    assert_eq!(report.toxicity.distribution.toxic.count, 3);
    assert_eq!(report.toxicity.unknown_score_ids, vec!["ghost".to_string()]);

    std::fs::write(&path, "").unwrap();
    let report = pipeline::run_pipeline(&cfg).unwrap();
    assert_eq!(report.toxicity.source, "lexicon");

    std::fs::write(&path, "d01,0.2\n").unwrap();
    let err = pipeline::run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn config_file_then_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("cfg.toml");
    std::fs::write(&path, "seed = 9\n[recommend]\ntop_k = 3\nsizes = [1, 3]\n").unwrap();
    let cfg = PipelineConfig::from_toml_file(&path).unwrap();
    assert_eq!((cfg.seed, cfg.recommend.top_k), (9, 3));
    assert_eq!(cfg.topics, vidrec::pipeline::TopicConfig::default());
    std::fs::write(&path, "[recommend]\ntop_k = \"five\"\n").unwrap();
    assert_eq!(PipelineConfig::from_toml_file(&path).unwrap_err().exit_code(), 1);
}
