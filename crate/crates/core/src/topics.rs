//! LDA topic modeling by collapsed Gibbs sampling.
//!
//! [`GibbsSampler`] owns the sampler state and can be stepped one sweep at a
//! time (count conservation is checkable between sweeps); [`fit_lda`] runs it
//! to completion and returns an immutable [`LdaModel`] with last-sample
//! estimates of the topic-word (`phi`) and document-topic (`theta`)
//! distributions.
//!
//! The topic count is chosen by k-fold cross-validation on held-out per-word
//! log-likelihood. Each held-out document is split into alternate tokens: the
//! first half is folded in against the frozen training `phi`, the second half
//! is scored.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;
use crate::textprep::Vocabulary;

/// Sparse document-term counts; each row holds `(term id, count)` with ids ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    rows: Vec<Vec<(u32, u32)>>,
    terms: Arc<[String]>,
    doc_ids: Vec<String>,
}

pub fn count_vectorize<'a, I>(docs: I, vocab: &Vocabulary) -> CountMatrix
where
    I: IntoIterator<Item = &'a [String]>,
{
    let rows: Vec<Vec<(u32, u32)>> = docs
        .into_iter()
        .map(|tokens| {
            let mut ids: Vec<u32> = tokens.iter().filter_map(|t| vocab.id(t)).collect();
            ids.sort_unstable();
            let mut row: Vec<(u32, u32)> = Vec::new();
            for id in ids {
                match row.last_mut() {
                    Some((last, c)) if *last == id => *c += 1,
                    _ => row.push((id, 1)),
                }
            }
            row
        })
        .collect();
    let doc_ids = (0..rows.len()).map(|i| i.to_string()).collect();
    CountMatrix {
        rows,
        terms: vocab.terms().to_vec().into(),
        doc_ids,
    }
}

impl CountMatrix {
    /// Builds a matrix from explicit sparse rows. Term ids must be ascending and below `terms.len()`.
    pub fn from_rows(rows: Vec<Vec<(u32, u32)>>, terms: Vec<String>) -> Result<Self> {
        for (d, row) in rows.iter().enumerate() {
            if row.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::InvalidParameter(format!("row {d}: term ids not strictly increasing")));
            }
            if row.iter().any(|&(t, _)| t as usize >= terms.len()) {
                return Err(Error::InvalidParameter(format!("row {d}: term id out of range")));
            }
        }
        let doc_ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Ok(CountMatrix {
            rows: rows
                .into_iter()
                .map(|r| r.into_iter().filter(|&(_, c)| c > 0).collect())
                .collect(),
            terms: terms.into(),
            doc_ids,
        })
    }

    pub fn with_doc_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                left: ids.len(),
                right: self.rows.len(),
            });
        }
        self.doc_ids = ids;
        Ok(self)
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn row(&self, doc: usize) -> &[(u32, u32)] {
        &self.rows[doc]
    }

    pub fn rows(&self) -> &[Vec<(u32, u32)>] {
        &self.rows
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_len(&self, doc: usize) -> usize {
        self.rows[doc].iter().map(|&(_, c)| c as usize).sum()
    }

    pub fn total_tokens(&self) -> usize {
        (0..self.n_docs()).map(|d| self.doc_len(d)).sum()
    }

    pub fn dense_row(&self, doc: usize) -> Vec<u32> {
        let mut out = vec![0; self.n_terms()];
        for &(t, c) in &self.rows[doc] {
            out[t as usize] = c;
        }
        out
    }

    /// Rows at `docs`, same columns.
    pub fn select(&self, docs: &[usize]) -> CountMatrix {
        CountMatrix {
            rows: docs.iter().map(|&d| self.rows[d].clone()).collect(),
            terms: Arc::clone(&self.terms),
            doc_ids: docs.iter().map(|&d| self.doc_ids[d].clone()).collect(),
        }
    }

    fn expand(row: &[(u32, u32)]) -> impl Iterator<Item = u32> + '_ {
        row.iter().flat_map(|&(t, c)| std::iter::repeat(t).take(c as usize))
    }
}

/// Flat prior over document mixtures. It does not scale with the topic count,
/// so held-out likelihoods of different topic counts are compared under the
/// same smoothing.
pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub topics: usize,
    /// Symmetric document-topic prior; `None` means [`DEFAULT_ALPHA`].
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaParams {
    pub fn new(topics: usize, seed: u64) -> Self {
        LdaParams {
            topics,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            seed,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(DEFAULT_ALPHA)
    }

    fn validate(&self) -> Result<()> {
        if self.topics < 1 {
            return Err(Error::InvalidParameter("topic count must be >= 1".into()));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        let a = self.alpha();
        if !(a.is_finite() && a > 0.0 && self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha and beta must be positive, got ({a}, {})",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Collapsed Gibbs sampler state.
pub struct GibbsSampler<'m> {
    matrix: &'m CountMatrix,
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    words: Vec<u32>,
    doc_start: Vec<usize>,
    assignments: Vec<u32>,
    doc_topic: Vec<u32>,
    /// word-major: `word_topic[w * k + t]`
    word_topic: Vec<u32>,
    topic_total: Vec<u32>,
    rng: ChaCha8Rng,
    sweeps: usize,
    weights: Vec<f64>,
}

impl<'m> GibbsSampler<'m> {
    pub fn new(matrix: &'m CountMatrix, params: &LdaParams) -> Result<Self> {
        params.validate()?;
        let total = matrix.total_tokens();
        if total == 0 {
            return Err(Error::InvalidParameter("count matrix has no tokens".into()));
        }
        if params.topics > total {
            return Err(Error::InvalidParameter(format!(
                "topic count {} exceeds token total {total}",
                params.topics
            )));
        }
        let (k, v) = (params.topics, matrix.n_terms());
        let mut rng = seeds::rng(params.seed);
        let mut words = Vec::with_capacity(total);
        let mut doc_start = Vec::with_capacity(matrix.n_docs() + 1);
        for row in matrix.rows() {
            doc_start.push(words.len());
            words.extend(CountMatrix::expand(row));
        }
        doc_start.push(words.len());

        let mut s = GibbsSampler {
            matrix,
            k,
            v,
            alpha: params.alpha(),
            beta: params.beta,
            assignments: vec![0; words.len()],
            words,
            doc_start,
            doc_topic: vec![0; matrix.n_docs() * k],
            word_topic: vec![0; v * k],
            topic_total: vec![0; k],
            rng: seeds::rng(0),
            sweeps: 0,
            weights: vec![0.0; k],
        };
        for d in 0..matrix.n_docs() {
            for i in s.doc_start[d]..s.doc_start[d + 1] {
                let z = rng.gen_range(0..k);
                s.assign(d, i, z);
            }
        }
        s.rng = rng;
        Ok(s)
    }

    fn assign(&mut self, doc: usize, token: usize, topic: usize) {
        let w = self.words[token] as usize;
        self.assignments[token] = topic as u32;
        self.doc_topic[doc * self.k + topic] += 1;
        self.word_topic[w * self.k + topic] += 1;
        self.topic_total[topic] += 1;
    }

    fn unassign(&mut self, doc: usize, token: usize) {
        let w = self.words[token] as usize;
        let topic = self.assignments[token] as usize;
        self.doc_topic[doc * self.k + topic] -= 1;
        self.word_topic[w * self.k + topic] -= 1;
        self.topic_total[topic] -= 1;
    }

    /// One full pass resampling every token's topic.
    pub fn sweep(&mut self) {
        let (k, alpha, beta) = (self.k, self.alpha, self.beta);
        let v_beta = self.v as f64 * beta;
        for d in 0..self.matrix.n_docs() {
            for i in self.doc_start[d]..self.doc_start[d + 1] {
                self.unassign(d, i);
                let w = self.words[i] as usize;
                let dt = &self.doc_topic[d * k..(d + 1) * k];
                let wt = &self.word_topic[w * k..(w + 1) * k];
                let mut acc = 0.0;
                for t in 0..k {
                    acc += (dt[t] as f64 + alpha) * (wt[t] as f64 + beta)
                        / (self.topic_total[t] as f64 + v_beta);
                    self.weights[t] = acc;
                }
                let u = self.rng.gen::<f64>() * acc;
                let z = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);
                self.assign(d, i, z);
            }
        }
        self.sweeps += 1;
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Recomputes every tally from the assignments and compares with the incremental counts.
    pub fn verify_counts(&self) -> Result<()> {
        let k = self.k;
        let mut doc_topic = vec![0u32; self.doc_topic.len()];
        let mut word_topic = vec![0u32; self.word_topic.len()];
        for d in 0..self.matrix.n_docs() {
            for i in self.doc_start[d]..self.doc_start[d + 1] {
                let z = self.assignments[i] as usize;
                doc_topic[d * k + z] += 1;
                word_topic[self.words[i] as usize * k + z] += 1;
            }
        }
        if doc_topic != self.doc_topic {
            return Err(Error::Invariant("document-topic counts drifted".into()));
        }
        if word_topic != self.word_topic {
            return Err(Error::Invariant("word-topic counts drifted".into()));
        }
        for d in 0..self.matrix.n_docs() {
            let sum: usize = self.doc_topic[d * k..(d + 1) * k].iter().map(|&c| c as usize).sum();
            if sum != self.matrix.doc_len(d) {
                return Err(Error::Invariant(format!("document {d} topic counts sum to {sum}")));
            }
        }
        for t in 0..k {
            let from_words: u64 = (0..self.v).map(|w| u64::from(self.word_topic[w * k + t])).sum();
            let from_docs: u64 = (0..self.matrix.n_docs())
                .map(|d| u64::from(self.doc_topic[d * k + t]))
                .sum();
            if from_words != from_docs || from_words != u64::from(self.topic_total[t]) {
                return Err(Error::Invariant(format!("topic {t} tallies disagree")));
            }
        }
        Ok(())
    }

    pub fn doc_topic_counts(&self, doc: usize) -> &[u32] {
        &self.doc_topic[doc * self.k..(doc + 1) * self.k]
    }

    pub fn topic_totals(&self) -> &[u32] {
        &self.topic_total
    }

    pub fn into_model(self, params: &LdaParams) -> LdaModel {
        let (k, v) = (self.k, self.v);
        let v_beta = v as f64 * self.beta;
        let mut phi = vec![0.0; k * v];
        for t in 0..k {
            let denom = self.topic_total[t] as f64 + v_beta;
            for w in 0..v {
                phi[t * v + w] = (self.word_topic[w * k + t] as f64 + self.beta) / denom;
            }
        }
        let n = self.matrix.n_docs();
        let k_alpha = k as f64 * self.alpha;
        let mut theta = vec![0.0; n * k];
        for d in 0..n {
            let denom = self.matrix.doc_len(d) as f64 + k_alpha;
            for t in 0..k {
                theta[d * k + t] = (self.doc_topic[d * k + t] as f64 + self.alpha) / denom;
            }
        }
        LdaModel {
            topics: k,
            terms: self.matrix.terms().to_vec(),
            doc_ids: self.matrix.doc_ids().to_vec(),
            phi,
            theta,
            alpha: self.alpha,
            beta: self.beta,
            iterations: params.iterations,
            seed: params.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    topics: usize,
    terms: Vec<String>,
    doc_ids: Vec<String>,
    /// K x V, row-major
    phi: Vec<f64>,
    /// N x K, row-major
    theta: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

pub fn fit_lda(matrix: &CountMatrix, params: &LdaParams) -> Result<LdaModel> {
    let mut sampler = GibbsSampler::new(matrix, params)?;
    for _ in 0..params.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model(params))
}

impl LdaModel {
    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn phi_row(&self, topic: usize) -> &[f64] {
        let v = self.n_terms();
        &self.phi[topic * v..(topic + 1) * v]
    }

    pub fn theta_row(&self, doc: usize) -> &[f64] {
        &self.theta[doc * self.topics..(doc + 1) * self.topics]
    }

    pub fn dominant_topic(&self, doc: usize) -> usize {
        dominant_topic(self.theta_row(doc))
    }

    pub fn dominant_topics(&self) -> Vec<usize> {
        (0..self.n_docs()).map(|d| self.dominant_topic(d)).collect()
    }

    /// The `n` highest-probability terms of `topic`, ties broken by term.
    pub fn top_terms(&self, topic: usize, n: usize) -> Result<Vec<(String, f64)>> {
        if topic >= self.topics {
            return Err(Error::InvalidParameter(format!(
                "topic {topic} out of range (model has {})",
                self.topics
            )));
        }
        if n < 1 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        let row = self.phi_row(topic);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| {
            row[b]
                .total_cmp(&row[a])
                .then_with(|| self.terms[a].cmp(&self.terms[b]))
        });
        Ok(order
            .into_iter()
            .take(n)
            .map(|w| (self.terms[w].clone(), row[w]))
            .collect())
    }

    const FORMAT_TAG: &'static str = "vidrec-lda 1";

    /// Plain-text serialization: header lines, vocabulary, dense phi and theta tables.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::FORMAT_TAG)?;
        writeln!(w, "topics {}", self.topics)?;
        writeln!(w, "terms {}", self.n_terms())?;
        writeln!(w, "documents {}", self.n_docs())?;
        writeln!(w, "alpha {}", self.alpha)?;
        writeln!(w, "beta {}", self.beta)?;
        writeln!(w, "iterations {}", self.iterations)?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "vocabulary")?;
        for t in &self.terms {
            writeln!(w, "{t}")?;
        }
        writeln!(w, "phi")?;
        for k in 0..self.topics {
            write_floats(&mut w, None, self.phi_row(k))?;
        }
        writeln!(w, "theta")?;
        for d in 0..self.n_docs() {
            write_floats(&mut w, Some(&self.doc_ids[d]), self.theta_row(d))?;
        }
        writeln!(w, "end")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_text(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(std::io::BufReader::new(f), &path.display().to_string())
    }

    pub fn read_text<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i + 1, l)),
                Some((i, Err(e))) => Err(Error::Parse {
                    path: origin.into(),
                    line: i + 1,
                    message: e.to_string(),
                }),
                None => Err(Error::Parse {
                    path: origin.into(),
                    line: 0,
                    message: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let bad = |line: usize, message: String| Error::Parse {
            path: origin.into(),
            line,
            message,
        };

        let (n, tag) = next("format tag")?;
        if tag != Self::FORMAT_TAG {
            return Err(bad(n, format!("unsupported format `{tag}`")));
        }
        let mut header = |key: &str| -> Result<String> {
            let (n, l) = next(key)?;
            l.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(n, format!("expected `{key} <value>`")))
        };
        let num = |s: String, key: &str| -> Result<usize> {
            s.parse().map_err(|_| bad(0, format!("bad {key} `{s}`")))
        };
        let topics = num(header("topics")?, "topics")?;
        let n_terms = num(header("terms")?, "terms")?;
        let n_docs = num(header("documents")?, "documents")?;
        let parse_f = |s: String| -> Result<f64> { s.parse().map_err(|_| bad(0, format!("bad float `{s}`"))) };
        let alpha = parse_f(header("alpha")?)?;
        let beta = parse_f(header("beta")?)?;
        let iterations = num(header("iterations")?, "iterations")?;
        let seed_s = header("seed")?;
        let seed: u64 = seed_s.parse().map_err(|_| bad(0, format!("bad seed `{seed_s}`")))?;

        let expect = |(n, l): (usize, String), word: &str| -> Result<()> {
            if l == word {
                Ok(())
            } else {
                Err(bad(n, format!("expected `{word}`, found `{l}`")))
            }
        };
        expect(next("vocabulary")?, "vocabulary")?;
        let mut terms = Vec::with_capacity(n_terms);
        for _ in 0..n_terms {
            terms.push(next("term")?.1);
        }
        expect(next("phi")?, "phi")?;
        let mut phi = Vec::with_capacity(topics * n_terms);
        for _ in 0..topics {
            let (n, l) = next("phi row")?;
            let row = parse_floats(&l).map_err(|m| bad(n, m))?;
            if row.len() != n_terms {
                return Err(bad(n, format!("phi row has {} values, expected {n_terms}", row.len())));
            }
            phi.extend(row);
        }
        expect(next("theta")?, "theta")?;
        let mut theta = Vec::with_capacity(n_docs * topics);
        let mut doc_ids = Vec::with_capacity(n_docs);
        for _ in 0..n_docs {
            let (n, l) = next("theta row")?;
            let (id, rest) = l
                .split_once('\t')
                .ok_or_else(|| bad(n, "theta row needs `id<TAB>values`".into()))?;
            let row = parse_floats(rest).map_err(|m| bad(n, m))?;
            if row.len() != topics {
                return Err(bad(n, format!("theta row has {} values, expected {topics}", row.len())));
            }
            doc_ids.push(id.to_string());
            theta.extend(row);
        }
        expect(next("end")?, "end")?;
        Ok(LdaModel {
            topics,
            terms,
            doc_ids,
            phi,
            theta,
            alpha,
            beta,
            iterations,
            seed,
        })
    }
}

fn write_floats<W: Write>(w: &mut W, label: Option<&str>, values: &[f64]) -> std::io::Result<()> {
    if let Some(l) = label {
        write!(w, "{l}\t")?;
    }
    for (i, x) in values.iter().enumerate() {
        if i > 0 {
            write!(w, " ")?;
        }
        write!(w, "{x}")?;
    }
    writeln!(w)
}

fn parse_floats(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split_ascii_whitespace()
        .map(|s| s.parse::<f64>().map_err(|_| format!("bad float `{s}`")))
        .collect()
}

/// Index of the largest entry; the lowest index wins ties.
pub fn dominant_topic(theta_row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in theta_row.iter().enumerate().skip(1) {
        if p > theta_row[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub topics: usize,
    /// Mean held-out log-likelihood per word across folds.
    pub mean_log_likelihood: f64,
    pub fold_log_likelihoods: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCountSelection {
    pub best: usize,
    pub scores: Vec<CandidateScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSettings {
    pub folds: usize,
    pub fold_in_sweeps: usize,
    pub iterations: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        SelectionSettings {
            folds: 5,
            fold_in_sweeps: 50,
            iterations: 500,
            alpha: None,
            beta: 0.01,
        }
    }
}

/// Grid search over `candidates` by k-fold held-out likelihood.
///
/// Folds and candidates are evaluated in parallel; every (candidate, fold)
/// pair draws from its own derived seed, so the result does not depend on
/// scheduling.
pub fn select_topic_count(
    matrix: &CountMatrix,
    candidates: &[usize],
    settings: &SelectionSettings,
    seed: u64,
) -> Result<TopicCountSelection> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate topic counts".into()));
    }
    if candidates.contains(&0) {
        return Err(Error::InvalidParameter("topic counts must be >= 1".into()));
    }
    if settings.folds < 2 {
        return Err(Error::InvalidParameter("need at least 2 folds".into()));
    }
    if matrix.n_docs() < settings.folds {
        return Err(Error::InvalidParameter(format!(
            "{} documents is fewer than {} folds",
            matrix.n_docs(),
            settings.folds
        )));
    }
    let mut order: Vec<usize> = (0..matrix.n_docs()).collect();
    order.shuffle(&mut seeds::rng(seeds::derive(seed, "folds")));
    let folds: Vec<Vec<usize>> = (0..settings.folds)
        .map(|f| {
            let mut docs: Vec<usize> = order.iter().copied().skip(f).step_by(settings.folds).collect();
            docs.sort_unstable();
            docs
        })
        .collect();

    let mut ks: Vec<usize> = candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();

    let jobs: Vec<(usize, usize)> = ks
        .iter()
        .flat_map(|&k| (0..settings.folds).map(move |f| (k, f)))
        .collect();
    let results: Vec<Result<Option<f64>>> = jobs
        .par_iter()
        .map(|&(k, f)| {
            let held = &folds[f];
            let train: Vec<usize> = (0..matrix.n_docs()).filter(|d| held.binary_search(d).is_err()).collect();
            let job_seed = seeds::derive_indexed(seeds::derive(seed, "cv"), (k as u64) << 32 | f as u64);
            let params = LdaParams {
                topics: k,
                alpha: settings.alpha,
                beta: settings.beta,
                iterations: settings.iterations,
                seed: job_seed,
            };
            let train_m = matrix.select(&train);
            if train_m.total_tokens() < k {
                return Err(Error::InvalidParameter(format!(
                    "fold {f}: training split has fewer tokens than {k} topics"
                )));
            }
            let model = fit_lda(&train_m, &params)?;
            Ok(held_out_log_likelihood(
                &model,
                &matrix.select(held),
                settings.fold_in_sweeps,
                seeds::derive(job_seed, "fold-in"),
            ))
        })
        .collect();

    let mut scores = Vec::with_capacity(ks.len());
    let mut it = results.into_iter();
    for &k in &ks {
        let mut fold_ll = Vec::with_capacity(settings.folds);
        for _ in 0..settings.folds {
            if let Some(ll) = it.next().expect("one result per job")? {
                fold_ll.push(ll);
            }
        }
        if fold_ll.is_empty() {
            return Err(Error::InvalidParameter("held-out folds contain no scorable tokens".into()));
        }
        let mean = fold_ll.iter().sum::<f64>() / fold_ll.len() as f64;
        scores.push(CandidateScore {
            topics: k,
            mean_log_likelihood: mean,
            fold_log_likelihoods: fold_ll,
        });
    }
    let mut best = &scores[0];
    for s in &scores[1..] {
        if s.mean_log_likelihood > best.mean_log_likelihood {
            best = s;
        }
    }
    Ok(TopicCountSelection {
        best: best.topics,
        scores,
    })
}

/// Per-word log-likelihood of the held-out halves of `docs` under `model`.
///
/// Each document's tokens alternate between an observed half (folded in by
/// Gibbs sampling against the frozen `phi`) and a scored half. Returns `None`
/// when no document has a scored token.
pub fn held_out_log_likelihood(model: &LdaModel, docs: &CountMatrix, sweeps: usize, seed: u64) -> Option<f64> {
    let k = model.topics();
    let alpha = model.alpha;
    let mut rng = seeds::rng(seed);
    let burn_in = sweeps / 5;
    let mut total_ll = 0.0;
    let mut scored = 0usize;
    let mut weights = vec![0.0; k];
    let mut theta_acc = vec![0.0; k];
    for d in 0..docs.n_docs() {
        let tokens: Vec<u32> = CountMatrix::expand(docs.row(d)).collect();
        let observed: Vec<u32> = tokens.iter().copied().step_by(2).collect();
        let held: Vec<u32> = tokens.iter().copied().skip(1).step_by(2).collect();
        if held.is_empty() {
            continue;
        }
        let mut z: Vec<usize> = Vec::with_capacity(observed.len());
        let mut counts = vec![0u32; k];
        for _ in &observed {
            let t = rng.gen_range(0..k);
            counts[t] += 1;
            z.push(t);
        }
        theta_acc.iter_mut().for_each(|x| *x = 0.0);
        let mut samples = 0usize;
        for sweep in 0..sweeps {
            for (i, &w) in observed.iter().enumerate() {
                counts[z[i]] -= 1;
                let mut acc = 0.0;
                for t in 0..k {
                    acc += (counts[t] as f64 + alpha) * model.phi[t * model.n_terms() + w as usize];
                    weights[t] = acc;
                }
                let u = rng.gen::<f64>() * acc;
                let nz = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
                counts[nz] += 1;
                z[i] = nz;
            }
            if sweep >= burn_in {
                let denom = observed.len() as f64 + k as f64 * alpha;
                for t in 0..k {
                    theta_acc[t] += (counts[t] as f64 + alpha) / denom;
                }
                samples += 1;
            }
        }
        let theta: Vec<f64> = if samples == 0 {
            let denom = observed.len() as f64 + k as f64 * alpha;
            counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
        } else {
            theta_acc.iter().map(|&x| x / samples as f64).collect()
        };
        for &w in &held {
            let p: f64 = (0..k).map(|t| theta[t] * model.phi[t * model.n_terms() + w as usize]).sum();
            total_ll += p.ln();
            scored += 1;
        }
    }
    (scored > 0).then(|| total_ll / scored as f64)
}
