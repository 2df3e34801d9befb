//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use vidrec::corpus::{Corpus, VideoRecord};
use vidrec::sentiment::SentimentClass;
use vidrec::simrec::{AttributeProfile, FilterMode, Recommender, SparseVector};
use vidrec::topics::CountMatrix;
use vidrec::toxicity::ToxicityClass;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense TF-IDF straight from the formula: `tf * (ln((1+N)/(1+df)) + 1)`, then
/// L2 row normalization. Terms are the sorted distinct tokens.
pub struct DenseTfidf {
    pub terms: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn dense_tfidf(docs: &[Vec<String>]) -> DenseTfidf {
    let terms: Vec<String> = docs
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = docs.len();
    let v = terms.len();
    let mut tf = vec![vec![0u32; v]; n];
    for (d, doc) in docs.iter().enumerate() {
        for tok in doc {
            let t = terms.binary_search(tok).unwrap();
            tf[d][t] += 1;
        }
    }
    let mut df = vec![0u32; v];
    for row in &tf {
        for t in 0..v {
            if row[t] > 0 {
                df[t] += 1;
            }
        }
    }
    let idf: Vec<f64> = df
        .iter()
        .map(|&c| ((n as f64 + 1.0) / (c as f64 + 1.0)).ln() + 1.0)
        .collect();
    let rows = tf
        .iter()
        .map(|row| {
            let mut w: Vec<f64> = (0..v).map(|t| row[t] as f64 * idf[t]).collect();
            let mut sq = 0.0;
            for x in &w {
                sq += x * x;
            }
            let norm = sq.sqrt();
            if norm > 0.0 {
                for x in &mut w {
                    *x /= norm;
                }
            }
            w
        })
        .collect();
    DenseTfidf { terms, rows }
}

pub fn dense_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for t in 0..a.len() {
        s += a[t] * b[t];
    }
    s
}

/// Rank every other video by dense dot product, then truncate/filter per `mode`.
pub fn dense_recommend(
    ids: &[String],
    rows: &[Vec<f64>],
    profiles: &[AttributeProfile],
    q: usize,
    k: usize,
    mode: FilterMode,
) -> Vec<(String, f64)> {
    let mut ranked: Vec<(usize, f64)> = (0..ids.len())
        .filter(|&d| d != q)
        .map(|d| (d, dense_dot(&rows[q], &rows[d])))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(ids[a.0].cmp(&ids[b.0])));
    let same = |d: usize| profiles[d] == profiles[q];
    let picked: Vec<(usize, f64)> = match mode {
        FilterMode::TruncateFirst => ranked.into_iter().take(k).filter(|&(d, _)| same(d)).collect(),
        FilterMode::FilterFirst => ranked.into_iter().filter(|&(d, _)| same(d)).take(k).collect(),
        FilterMode::Unfiltered => ranked.into_iter().take(k).collect(),
    };
    picked.into_iter().map(|(d, s)| (ids[d].clone(), s)).collect()
}

/// Converts dense oracle rows into the library's sparse vectors.
pub fn to_sparse(rows: &[Vec<f64>]) -> Vec<SparseVector> {
    rows.iter()
        .map(|r| {
            let entries = r
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(t, &w)| (t as u32, w))
                .collect();
            SparseVector::new(r.len(), entries).unwrap()
        })
        .collect()
}

/// Random token documents over a `vocab`-word alphabet, with some empty and
/// some duplicated documents so ties and zero vectors occur.
pub fn random_docs(rng: &mut ChaCha8Rng, n: usize, vocab: usize) -> Vec<Vec<String>> {
    let mut docs: Vec<Vec<String>> = Vec::with_capacity(n);
    for _ in 0..n {
        let roll: f64 = rng.gen();
        if roll < 0.05 {
            docs.push(Vec::new());
        } else if roll < 0.15 && !docs.is_empty() {
            let src = rng.gen_range(0..docs.len());
            docs.push(docs[src].clone());
        } else {
            let len = rng.gen_range(1..=12);
            docs.push((0..len).map(|_| format!("t{:02}", rng.gen_range(0..vocab))).collect());
        }
    }
    docs
}

pub fn random_profiles(rng: &mut ChaCha8Rng, n: usize, topics: usize) -> Vec<AttributeProfile> {
    (0..n)
        .map(|_| AttributeProfile {
            sentiment: SentimentClass::ALL[rng.gen_range(0..3)],
            toxicity: if rng.gen_bool(0.1) {
                ToxicityClass::Toxic
            } else {
                ToxicityClass::NonToxic
            },
            topic: rng.gen_range(0..topics),
        })
        .collect()
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i:04}")).collect()
}

/// Corpus whose records carry the given descriptions, spread over publish months.
pub fn corpus_from_descriptions(descriptions: &[String], rng: &mut ChaCha8Rng) -> Corpus {
    let start = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap();
    let records = descriptions
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let date = start + chrono::Duration::days(rng.gen_range(0..660));
            VideoRecord::new(format!("v{i:04}"), "", d.clone(), date)
        })
        .collect();
    Corpus::from_records(records).unwrap()
}

/// Recommender over `docs` (ids `v0000..`), with TF-IDF from the dense oracle.
pub fn recommender(docs: &[Vec<String>], profiles: Vec<AttributeProfile>) -> Recommender {
    let dense = dense_tfidf(docs);
    let width = dense.terms.len().max(1);
    let rows: Vec<Vec<f64>> = dense
        .rows
        .iter()
        .map(|r| if r.is_empty() { vec![0.0; width] } else { r.clone() })
        .collect();
    Recommender::new(ids(docs.len()), to_sparse(&rows), profiles).unwrap()
}

/// Two planted topics over disjoint 10-word vocabularies; doc `d` belongs to topic `d % 2`.
pub fn planted_two_topic(seed: u64, docs: usize) -> (CountMatrix, Vec<usize>) {
    let mut rng = rng(seed);
    let terms: Vec<String> = (0..20).map(|i| format!("w{i:02}")).collect();
    let mut rows = Vec::with_capacity(docs);
    let mut labels = Vec::with_capacity(docs);
    for d in 0..docs {
        let t = d % 2;
        let mut counts = [0u32; 20];
        for _ in 0..rng.gen_range(20..60) {
            counts[t * 10 + rng.gen_range(0..10)] += 1;
        }
        rows.push(
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (i as u32, c))
                .collect(),
        );
        labels.push(t);
    }
    (CountMatrix::from_rows(rows, terms).unwrap(), labels)
}

/// Fraction of documents whose assigned topic matches the label under the best
/// one-to-one relabeling (exhaustive over permutations; fine for small K).
pub fn best_permutation_purity(assigned: &[usize], labels: &[usize], k: usize) -> f64 {
    let n_labels = labels.iter().max().map_or(0, |m| m + 1);
    let width = k.max(n_labels);
    let mut perm: Vec<usize> = (0..width).collect();
    let mut best = 0usize;
    permute(&mut perm, 0, &mut |p| {
        let hits = assigned.iter().zip(labels).filter(|(&a, &l)| p[a] == l).count();
        best = best.max(hits);
    });
    best as f64 / labels.len() as f64
}

fn permute(p: &mut Vec<usize>, i: usize, f: &mut dyn FnMut(&[usize])) {
    if i == p.len() {
        f(p);
        return;
    }
    for j in i..p.len() {
        p.swap(i, j);
        permute(p, i + 1, f);
        p.swap(i, j);
    }
}

/// The library's own TF-IDF path: unfiltered vocabulary, counts, weights.
pub fn library_vectors(docs: &[Vec<String>]) -> Vec<SparseVector> {
    use vidrec::textprep::{build_vocabulary, VocabularyFilter};
    match build_vocabulary(docs.iter().map(Vec::as_slice), &VocabularyFilter::unfiltered()) {
        Ok(vocab) => {
            let m = vidrec::topics::count_vectorize(docs.iter().map(Vec::as_slice), &vocab);
            vidrec::simrec::tfidf_vectorize(&m, &vocab).unwrap()
        }
        Err(_) => vec![SparseVector::zero(1); docs.len()],
    }
}
