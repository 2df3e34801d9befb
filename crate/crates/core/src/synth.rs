//! Synthetic corpora with planted topics, sentiment and toxicity.
//!
//! Topic vocabularies are disjoint; sentiment and toxic terms are drawn from
//! the bundled lexicons so the analyzers can recover them. Class counts are
//! exact: `round(n * toxic_fraction)` toxic videos, and sentiment counts by
//! largest remainder so they sum to `n`.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, VideoRecord};
use crate::error::{Error, Result};
use crate::seeds;
use crate::sentiment::SentimentClass;

const TOPIC_WORDS: [&[&str]; 6] = [
    &[
        "covid", "coronavirus", "health", "pandemic", "vaccine", "hospital", "symptoms", "doctors",
        "virus", "variant", "booster", "immunity", "infection", "masks", "testing", "omicron",
        "patients", "nurses", "clinic", "dose",
    ],
    &[
        "news", "channel", "live", "update", "report", "breaking", "latest", "today", "press",
        "conference", "bulletin", "anchor", "headlines", "broadcast", "coverage", "reporter",
        "studio", "segment", "weekly", "daily",
    ],
    &[
        "economy", "markets", "inflation", "jobs", "employment", "prices", "business", "stocks",
        "shipping", "supply", "wages", "trade", "banks", "exports", "payroll", "retail",
        "investors", "budget", "factories", "tariffs",
    ],
    &[
        "school", "students", "teachers", "classes", "campus", "university", "lessons", "online",
        "exams", "learning", "education", "curriculum", "college", "homework", "lecture",
        "semester", "tutors", "grades", "enrollment", "graduation",
    ],
    &[
        "travel", "flights", "airport", "border", "passengers", "tourism", "airline", "quarantine",
        "visa", "cruise", "hotel", "borders", "trips", "destination", "luggage", "itinerary",
        "terminal", "arrivals", "departures", "ferry",
    ],
    &[
        "research", "study", "scientists", "data", "trial", "results", "laboratory", "analysis",
        "evidence", "findings", "journal", "experiment", "samples", "genome", "sequencing",
        "cohort", "protocol", "dataset", "statistics", "antibodies",
    ],
];

const POSITIVE_WORDS: &[&str] = &[
    "good", "great", "hope", "safe", "thank", "love", "happy", "best", "wonderful", "grateful",
    "healthy", "strong", "win", "support", "excellent",
];
const NEGATIVE_WORDS: &[&str] = &[
    "bad", "death", "fear", "crisis", "sad", "worst", "pain", "loss", "terrible", "dangerous",
    "tragic", "suffering", "grief", "panic",
];
const TOXIC_WORDS: &[&str] = &["idiots", "morons", "covidiots", "scumbags"];
const FILLER_WORDS: &[&str] = &[
    "video", "watch", "subscribe", "comment", "click", "link", "info", "episode", "clip", "stream",
    "the", "and", "of", "to", "in", "for", "this", "is", "on", "with",
];
const CATEGORIES: &[&str] = &["News & Politics", "Education", "Science & Technology", "People & Blogs"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub videos: usize,
    pub topics: usize,
    /// Positive, neutral, negative shares; must sum to 1.
    pub sentiment_mix: [f64; 3],
    pub toxic_fraction: f64,
    pub mean_tokens: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            videos: 500,
            topics: 2,
            sentiment_mix: [0.5, 0.35, 0.15],
            toxic_fraction: 0.01,
            mean_tokens: 40,
            start: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2024, 10, 31).unwrap(),
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.topics < 1 {
            return bad("synthetic corpus needs at least one topic".into());
        }
        if self.sentiment_mix.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return bad(format!("sentiment mix entries must be in [0, 1]: {:?}", self.sentiment_mix));
        }
        if (self.sentiment_mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("sentiment mix must sum to 1: {:?}", self.sentiment_mix));
        }
        if !(0.0..=1.0).contains(&self.toxic_fraction) {
            return bad(format!("toxic fraction must be in [0, 1], got {}", self.toxic_fraction));
        }
        if self.mean_tokens < 4 {
            return bad("mean_tokens must be >= 4".into());
        }
        if self.end < self.start {
            return bad("end date precedes start date".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub video_id: String,
    pub topic: usize,
    pub sentiment: SentimentClass,
    pub toxic: bool,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub truth: Vec<PlantedTruth>,
}

/// Word list for planted topic `t`; topics past the named lists get generated terms.
pub fn topic_vocabulary(t: usize) -> Vec<String> {
    match TOPIC_WORDS.get(t) {
        Some(words) => words.iter().map(|w| w.to_string()).collect(),
        None => (0..20).map(|j| format!("topic{t}term{j:02}")).collect(),
    }
}

/// Splits `n` into counts proportional to `shares` by largest remainder.
fn apportion(n: usize, shares: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = shares.iter().map(|&s| s * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &'a [&'a str]) -> &'a str {
    words[rng.gen_range(0..words.len())]
}

pub fn generate_synthetic(params: &SynthParams, seed: u64) -> Result<SyntheticCorpus> {
    params.validate()?;
    let n = params.videos;
    let mut rng = seeds::rng(seeds::derive(seed, "synth"));

    let mut topics: Vec<usize> = (0..n).map(|i| i % params.topics).collect();
    topics.shuffle(&mut rng);

    let counts = apportion(n, &params.sentiment_mix);
    let mut sentiments: Vec<SentimentClass> = SentimentClass::ALL
        .iter()
        .zip(&counts)
        .flat_map(|(&c, &k)| std::iter::repeat(c).take(k))
        .collect();
    sentiments.shuffle(&mut rng);

    let n_toxic = (n as f64 * params.toxic_fraction).round() as usize;
    let mut toxic = vec![false; n];
    toxic[..n_toxic].iter_mut().for_each(|t| *t = true);
    toxic.shuffle(&mut rng);

    let topic_words: Vec<Vec<String>> = (0..params.topics).map(topic_vocabulary).collect();
    let span_days = (params.end - params.start).num_days();
    let width = n.max(1).to_string().len().max(5);

    let mut records = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("vid{i:0width$}");
        let words = &topic_words[topics[i]];
        let topic_word = |rng: &mut ChaCha8Rng| words[rng.gen_range(0..words.len())].clone();

        let len = rng.gen_range(params.mean_tokens / 2..=params.mean_tokens * 3 / 2);
        let mut body: Vec<String> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    pick(&mut rng, FILLER_WORDS).to_string()
                } else {
                    topic_word(&mut rng)
                }
            })
            .collect();
        let insert = |rng: &mut ChaCha8Rng, body: &mut Vec<String>, w: &str| {
            let at = rng.gen_range(0..=body.len());
            body.insert(at, w.to_string());
        };
        let planted = match sentiments[i] {
            SentimentClass::Positive => POSITIVE_WORDS,
            SentimentClass::Negative => NEGATIVE_WORDS,
            SentimentClass::Neutral => &[][..],
        };
        if !planted.is_empty() {
            for _ in 0..rng.gen_range(2..=4) {
                let w = pick(&mut rng, planted);
                insert(&mut rng, &mut body, w);
            }
        }
        if toxic[i] {
            for _ in 0..2 {
                let w = pick(&mut rng, TOXIC_WORDS);
                insert(&mut rng, &mut body, w);
            }
        }
        let mut description = body.join(" ");
        if rng.gen_bool(0.2) {
            description.push_str(" https://example.org/more");
        }

        let title_len = rng.gen_range(3..=6);
        let mut title: Vec<String> = (0..title_len).map(|_| topic_word(&mut rng)).collect();
        if rng.gen_bool(0.3) {
            title[0] = title[0].to_uppercase();
        }

        let date = params.start + Duration::days(rng.gen_range(0..=span_days));
        let mut rec = VideoRecord::new(id.clone(), title.join(" "), description, date);
        rec.url = format!("https://www.youtube.com/watch?v={id}");
        rec.view_count = rng.gen_range(0..1_000_000);
        rec.like_count = rec.view_count / rng.gen_range(20..200);
        rec.comment_count = rec.like_count / rng.gen_range(5..50);
        rec.duration_seconds = rng.gen_range(30..3600);
        rec.categories = vec![pick(&mut rng, CATEGORIES).to_string()];
        rec.tags = vec![topic_word(&mut rng), topic_word(&mut rng)];
        rec.language = "en".into();
        records.push(rec);
        truth.push(PlantedTruth {
            video_id: id,
            topic: topics[i],
            sentiment: sentiments[i],
            toxic: toxic[i],
        });
    }
    Ok(SyntheticCorpus {
        corpus: Corpus::from_records(records)?,
        truth,
    })
}

/// `corpus.csv` -> `corpus.truth.csv`
pub fn truth_path(corpus_path: &Path) -> PathBuf {
    let stem = corpus_path.file_stem().unwrap_or_default().to_string_lossy();
    corpus_path.with_file_name(format!("{stem}.truth.csv"))
}

pub fn write_truth<W: Write>(truth: &[PlantedTruth], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["video_id", "topic", "sentiment", "toxic"])?;
    for t in truth {
        w.write_record([
            t.video_id.as_str(),
            &t.topic.to_string(),
            t.sentiment.as_str(),
            if t.toxic { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(|e| Error::io("<truth>", e))?;
    Ok(())
}

/// Writes the corpus to `path` and the planted attributes next to it.
pub fn write_synthetic(synth: &SyntheticCorpus, path: &Path) -> Result<PathBuf> {
    synth.corpus.save(path)?;
    let tp = truth_path(path);
    let f = std::fs::File::create(&tp).map_err(|e| Error::io(&tp, e))?;
    write_truth(&synth.truth, std::io::BufWriter::new(f))?;
    Ok(tp)
}
