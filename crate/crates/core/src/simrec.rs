//! TF-IDF vectors, sparse cosine similarity and attribute-filtered top-n recommendation.
//!
//! Queries are scored through an inverted index over term postings, so the
//! work per query is proportional to the postings of the query's terms; the
//! full N x N similarity matrix is never built. Candidates are ordered by
//! similarity descending, then video id ascending, and zero-similarity
//! candidates are never recommended.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sentiment::SentimentClass;
use crate::textprep::Vocabulary;
use crate::topics::CountMatrix;
use crate::toxicity::ToxicityClass;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn new(dim: usize, entries: Vec<(u32, f64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidParameter("sparse vector ids must be strictly increasing".into()));
        }
        if let Some(&(t, _)) = entries.iter().find(|&&(t, _)| t as usize >= dim) {
            return Err(Error::InvalidParameter(format!("term id {t} outside dimension {dim}")));
        }
        if entries.iter().any(|&(_, w)| !w.is_finite()) {
            return Err(Error::InvalidParameter("sparse vector weights must be finite".into()));
        }
        Ok(SparseVector { dim, entries })
    }

    pub fn zero(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, w)| w == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Merge-join dot product, accumulated in ascending term order.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// Smoothed inverse document frequency `ln((1 + n) / (1 + df)) + 1`.
pub fn smoothed_idf(n_docs: usize, df: u32) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + f64::from(df))).ln() + 1.0
}

/// Raw counts times smoothed idf, then L2-normalized per row. Empty rows stay zero.
pub fn tfidf_vectorize(matrix: &CountMatrix, vocab: &Vocabulary) -> Result<Vec<SparseVector>> {
    if matrix.n_terms() != vocab.len() {
        return Err(Error::DimensionMismatch {
            left: matrix.n_terms(),
            right: vocab.len(),
        });
    }
    let n = matrix.n_docs();
    let idf: Vec<f64> = (0..vocab.len() as u32).map(|t| smoothed_idf(n, vocab.df(t))).collect();
    Ok(matrix
        .rows()
        .iter()
        .map(|row| {
            let mut entries: Vec<(u32, f64)> = row
                .iter()
                .map(|&(t, c)| (t, f64::from(c) * idf[t as usize]))
                .collect();
            let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                for e in &mut entries {
                    e.1 /= norm;
                }
            }
            SparseVector {
                dim: vocab.len(),
                entries,
            }
        })
        .collect())
}

/// Cosine similarity; 0 when either side is the zero vector.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeProfile {
    pub sentiment: SentimentClass,
    pub toxicity: ToxicityClass,
    pub topic: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterMode {
    /// Rank, truncate to k, then drop attribute mismatches.
    #[default]
    TruncateFirst,
    /// Drop attribute mismatches, then rank and truncate.
    FilterFirst,
    /// No attribute filter.
    Unfiltered,
}

impl std::str::FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncate-first" | "truncate_first" => Ok(FilterMode::TruncateFirst),
            "filter-first" | "filter_first" => Ok(FilterMode::FilterFirst),
            "unfiltered" | "none" => Ok(FilterMode::Unfiltered),
            other => Err(Error::InvalidParameter(format!("unknown filter mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for FilterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FilterMode::TruncateFirst => "truncate-first",
            FilterMode::FilterFirst => "filter-first",
            FilterMode::Unfiltered => "unfiltered",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub video_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationSet {
    pub query: String,
    pub items: Vec<Recommendation>,
    pub requested: usize,
}

impl RecommendationSet {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|r| r.video_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Immutable query structure over a fixed set of vectors and profiles.
#[derive(Debug, Clone)]
pub struct Recommender {
    ids: Vec<String>,
    vectors: Vec<SparseVector>,
    profiles: Vec<AttributeProfile>,
    postings: Vec<Vec<(u32, f64)>>,
    position: HashMap<String, usize>,
    /// rank of each id in lexicographic order, for cheap tie-breaking
    id_rank: Vec<u32>,
}

#[derive(Clone, Copy)]
struct Scored {
    doc: u32,
    sim: f64,
}

impl Recommender {
    pub fn new(ids: Vec<String>, vectors: Vec<SparseVector>, profiles: Vec<AttributeProfile>) -> Result<Self> {
        if ids.len() != vectors.len() {
            return Err(Error::DimensionMismatch {
                left: ids.len(),
                right: vectors.len(),
            });
        }
        if ids.len() != profiles.len() {
            return Err(Error::DimensionMismatch {
                left: ids.len(),
                right: profiles.len(),
            });
        }
        let dim = vectors.first().map_or(0, SparseVector::dim);
        if let Some(v) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: v.dim(),
            });
        }
        let mut position = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if position.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate video_id `{id}`")));
            }
        }
        let mut sorted: Vec<usize> = (0..ids.len()).collect();
        sorted.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
        let mut id_rank = vec![0u32; ids.len()];
        for (rank, &i) in sorted.iter().enumerate() {
            id_rank[i] = rank as u32;
        }
        let mut postings: Vec<Vec<(u32, f64)>> = vec![Vec::new(); dim];
        for (d, v) in vectors.iter().enumerate() {
            for &(t, w) in v.entries() {
                if w != 0.0 {
                    postings[t as usize].push((d as u32, w));
                }
            }
        }
        Ok(Recommender {
            ids,
            vectors,
            profiles,
            postings,
            position,
            id_rank,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vectors(&self) -> &[SparseVector] {
        &self.vectors
    }

    pub fn profiles(&self) -> &[AttributeProfile] {
        &self.profiles
    }

    fn order(&self, a: &Scored, b: &Scored) -> Ordering {
        b.sim
            .total_cmp(&a.sim)
            .then_with(|| self.id_rank[a.doc as usize].cmp(&self.id_rank[b.doc as usize]))
    }

    pub fn recommend(&self, query: &str, k: usize, mode: FilterMode) -> Result<RecommendationSet> {
        let q = *self
            .position
            .get(query)
            .ok_or_else(|| Error::UnknownVideo(query.to_string()))?;
        check_k(k)?;
        let mut scratch = vec![0.0; self.len()];
        Ok(self.recommend_at(q, k, mode, &mut scratch))
    }

    /// One set per video, in the recommender's id order.
    pub fn recommend_all(&self, k: usize, mode: FilterMode) -> Result<Vec<RecommendationSet>> {
        check_k(k)?;
        Ok((0..self.len())
            .into_par_iter()
            .map_init(|| vec![0.0; self.len()], |scratch, q| self.recommend_at(q, k, mode, scratch))
            .collect())
    }

    fn recommend_at(&self, q: usize, k: usize, mode: FilterMode, scores: &mut [f64]) -> RecommendationSet {
        let mut touched: Vec<u32> = Vec::new();
        for &(t, wq) in self.vectors[q].entries() {
            for &(d, wd) in &self.postings[t as usize] {
                if scores[d as usize] == 0.0 {
                    touched.push(d);
                }
                scores[d as usize] += wq * wd;
            }
        }
        // a partial sum can return to exactly 0.0 with signed weights
        touched.sort_unstable();
        touched.dedup();
        let candidates: Vec<Scored> = touched
            .iter()
            .map(|&d| Scored {
                doc: d,
                sim: scores[d as usize],
            })
            .collect();
        for &d in &touched {
            scores[d as usize] = 0.0;
        }
        self.finish(q, k, mode, candidates)
    }

    /// Same contract as [`Recommender::recommend`], scoring every pair by merge-join dot product.
    pub fn recommend_exhaustive(&self, query: &str, k: usize, mode: FilterMode) -> Result<RecommendationSet> {
        let q = *self
            .position
            .get(query)
            .ok_or_else(|| Error::UnknownVideo(query.to_string()))?;
        check_k(k)?;
        let qv = &self.vectors[q];
        let candidates = (0..self.len())
            .map(|d| Scored {
                doc: d as u32,
                sim: qv.dot(&self.vectors[d]),
            })
            .collect();
        Ok(self.finish(q, k, mode, candidates))
    }

    fn finish(&self, q: usize, k: usize, mode: FilterMode, mut candidates: Vec<Scored>) -> RecommendationSet {
        let query_profile = self.profiles[q];
        let matches = |c: &Scored| self.profiles[c.doc as usize] == query_profile;
        candidates.retain(|c| c.doc as usize != q && c.sim > 0.0);
        if mode == FilterMode::FilterFirst {
            candidates.retain(matches);
        }
        if candidates.len() > k {
            candidates.select_nth_unstable_by(k - 1, |a, b| self.order(a, b));
            candidates.truncate(k);
        }
        candidates.sort_by(|a, b| self.order(a, b));
        if mode == FilterMode::TruncateFirst {
            candidates.retain(matches);
        }
        RecommendationSet {
            query: self.ids[q].clone(),
            items: candidates
                .into_iter()
                .map(|c| Recommendation {
                    video_id: self.ids[c.doc as usize].clone(),
                    similarity: c.sim,
                })
                .collect(),
            requested: k,
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 1 {
        Err(Error::InvalidParameter("k must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Writes `query_id,rank,rec_id,similarity` rows; rank is 1-based.
pub fn write_recommendations<W: Write>(sets: &[RecommendationSet], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["query_id", "rank", "rec_id", "similarity"])?;
    for set in sets {
        for (i, r) in set.items.iter().enumerate() {
            w.write_record([
                set.query.as_str(),
                &(i + 1).to_string(),
                r.video_id.as_str(),
                &r.similarity.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<recommendations>", e))?;
    Ok(())
}

/// Reads a table written by [`write_recommendations`]; `queries` restores sets that had no rows.
pub fn read_recommendations<R: Read>(reader: R, queries: &[String], requested: usize) -> Result<Vec<RecommendationSet>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut by_query: HashMap<String, Vec<(usize, Recommendation)>> = HashMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let row_no = i + 2;
        let field = |c: usize| row.get(c).unwrap_or("");
        let rank: usize = field(1)
            .parse()
            .map_err(|_| Error::row(row_no, "rank", format!("bad rank `{}`", field(1))))?;
        let similarity: f64 = field(3)
            .parse()
            .map_err(|_| Error::row(row_no, "similarity", format!("bad similarity `{}`", field(3))))?;
        by_query.entry(field(0).to_string()).or_default().push((
            rank,
            Recommendation {
                video_id: field(2).to_string(),
                similarity,
            },
        ));
    }
    let mut out = Vec::with_capacity(queries.len());
    for q in queries {
        let mut items = by_query.remove(q).unwrap_or_default();
        items.sort_by_key(|(rank, _)| *rank);
        out.push(RecommendationSet {
            query: q.clone(),
            items: items.into_iter().map(|(_, r)| r).collect(),
            requested,
        });
    }
    if let Some(q) = by_query.keys().next() {
        return Err(Error::UnknownVideo(q.clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(dim: usize, e: &[(u32, f64)]) -> SparseVector {
        SparseVector::new(dim, e.to_vec()).unwrap()
    }

    #[test]
    fn cosine_basics() {
        let v = sv(3, &[(0, 0.3), (2, 0.7)]);
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&sv(3, &[(0, 1.0)]), &sv(3, &[(1, 1.0)])).unwrap(), 0.0);
        let c = cosine(&sv(3, &[(0, 1.0), (1, 1.0)]), &sv(3, &[(0, 1.0)])).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(cosine(&SparseVector::zero(3), &v).unwrap(), 0.0);
        assert!(cosine(&sv(2, &[]), &sv(3, &[])).is_err());
    }

    #[test]
    fn sparse_vector_validation() {
        assert!(SparseVector::new(3, vec![(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVector::new(3, vec![(3, 1.0)]).is_err());
        assert!(SparseVector::new(3, vec![(0, f64::NAN)]).is_err());
    }

    fn profile(s: SentimentClass) -> AttributeProfile {
        AttributeProfile {
            sentiment: s,
            toxicity: ToxicityClass::NonToxic,
            topic: 0,
        }
    }

    #[test]
    fn identical_pair_recommend_each_other() {
        let v = sv(1, &[(0, 1.0)]);
        let p = profile(SentimentClass::Neutral);
        let r = Recommender::new(vec!["a".into(), "b".into()], vec![v.clone(), v], vec![p, p]).unwrap();
        let a = r.recommend("a", 1, FilterMode::TruncateFirst).unwrap();
        assert_eq!(a.items, vec![Recommendation { video_id: "b".into(), similarity: 1.0 }]);
        let b = r.recommend("b", 1, FilterMode::TruncateFirst).unwrap();
        assert_eq!(b.ids().collect::<Vec<_>>(), vec!["a"]);
        assert!(r.recommend("zz", 1, FilterMode::TruncateFirst).is_err());
        assert!(r.recommend("a", 0, FilterMode::TruncateFirst).is_err());
    }

    #[test]
    fn mismatched_profile_filtered_out() {
        let v = sv(1, &[(0, 1.0)]);
        let r = Recommender::new(
            vec!["a".into(), "b".into()],
            vec![v.clone(), v],
            vec![profile(SentimentClass::Positive), profile(SentimentClass::Negative)],
        )
        .unwrap();
        assert!(r.recommend("a", 1, FilterMode::TruncateFirst).unwrap().is_empty());
        assert!(r.recommend("a", 1, FilterMode::FilterFirst).unwrap().is_empty());
        assert_eq!(r.recommend("a", 1, FilterMode::Unfiltered).unwrap().len(), 1);
    }

    #[test]
    fn truncate_first_can_return_fewer_than_filter_first() {
        // b is most similar but mismatched; c matches
        let q = sv(2, &[(0, 1.0)]);
        let b = sv(2, &[(0, 1.0)]);
        let c = sv(2, &[(0, 0.6), (1, 0.8)]);
        let pos = profile(SentimentClass::Positive);
        let neg = profile(SentimentClass::Negative);
        let r = Recommender::new(vec!["a".into(), "b".into(), "c".into()], vec![q, b, c], vec![pos, neg, pos]).unwrap();
        assert!(r.recommend("a", 1, FilterMode::TruncateFirst).unwrap().is_empty());
        let ff = r.recommend("a", 1, FilterMode::FilterFirst).unwrap();
        assert_eq!(ff.ids().collect::<Vec<_>>(), vec!["c"]);
    }

    #[test]
    fn ties_broken_by_id() {
        let v = sv(1, &[(0, 1.0)]);
        let p = profile(SentimentClass::Neutral);
        let ids: Vec<String> = ["q", "d", "b", "c"].iter().map(|s| s.to_string()).collect();
        let r = Recommender::new(ids, vec![v.clone(), v.clone(), v.clone(), v], vec![p; 4]).unwrap();
        let s = r.recommend("q", 2, FilterMode::TruncateFirst).unwrap();
        assert_eq!(s.ids().collect::<Vec<_>>(), vec!["b", "c"]);
    }

    #[test]
    fn single_video_has_empty_set() {
        let r = Recommender::new(vec!["a".into()], vec![sv(1, &[(0, 1.0)])], vec![profile(SentimentClass::Neutral)]).unwrap();
        let all = r.recommend_all(5, FilterMode::TruncateFirst).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].is_empty());
    }

    #[test]
    fn identical_corpus_fills_k() {
        let v = sv(2, &[(0, 0.6), (1, 0.8)]);
        let ids: Vec<String> = (0..10).map(|i| format!("v{i}")).collect();
        let r = Recommender::new(ids, vec![v; 10], vec![profile(SentimentClass::Positive); 10]).unwrap();
        for set in r.recommend_all(5, FilterMode::TruncateFirst).unwrap() {
            assert_eq!(set.len(), 5);
            assert!(!set.ids().any(|id| id == set.query));
        }
    }

    #[test]
    fn recommendations_csv_round_trip() {
        let v = sv(2, &[(0, 0.6), (1, 0.8)]);
        let w = sv(2, &[(1, 1.0)]);
        let z = SparseVector::zero(2);
        let ids: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let p = profile(SentimentClass::Positive);
        let r = Recommender::new(ids.clone(), vec![v, w, z], vec![p; 3]).unwrap();
        let sets = r.recommend_all(3, FilterMode::TruncateFirst).unwrap();
        let mut buf = Vec::new();
        write_recommendations(&sets, &mut buf).unwrap();
        let back = read_recommendations(buf.as_slice(), &ids, 3).unwrap();
        assert_eq!(back, sets);
        assert!(back[2].is_empty());
        assert!(read_recommendations(buf.as_slice(), &ids[..1], 3).is_err());
    }
}
