//! Catalog coverage of a recommendation run: aggregate, per publish month,
//! cumulative over publish order, and by recommendation list size.
//!
//! Every ratio is computed as `covered as f64 / total as f64` from integer
//! counts, and the counts are kept alongside, so the identities between the
//! metrics hold exactly.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{month_buckets, Corpus, YearMonth};
use crate::error::{Error, Result};
use crate::simrec::{FilterMode, RecommendationSet, Recommender};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonthlyMode {
    /// Month m's videos that appear in any recommendation list, corpus-wide.
    #[default]
    CorpusWide,
    /// Month m's videos recommended by queries published in month m.
    WithinMonth,
}

impl std::str::FromStr for MonthlyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corpus-wide" => Ok(MonthlyMode::CorpusWide),
            "within-month" => Ok(MonthlyMode::WithinMonth),
            other => Err(Error::InvalidParameter(format!("unknown monthly coverage mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthlyCoverage {
    pub month: YearMonth,
    pub covered: usize,
    pub total: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativePoint {
    pub processed: usize,
    pub covered: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeCoverage {
    pub k: usize,
    pub covered: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub k: usize,
    pub total: usize,
    pub covered: usize,
    pub aggregate: f64,
    pub monthly: Vec<MonthlyCoverage>,
    pub cumulative: Vec<CumulativePoint>,
    pub by_size: Vec<SizeCoverage>,
}

fn ratio(covered: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        covered as f64 / total as f64
    }
}

/// Distinct ids appearing in any list.
pub fn recommended_ids(sets: &[RecommendationSet]) -> HashSet<&str> {
    sets.iter().flat_map(RecommendationSet::ids).collect()
}

/// Fraction of the `n` catalog videos recommended at least once.
pub fn aggregate_coverage(sets: &[RecommendationSet], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("coverage of an empty catalog is undefined".into()));
    }
    Ok(ratio(recommended_ids(sets).len(), n))
}

pub fn coverage_over_time(
    sets: &[RecommendationSet],
    buckets: &BTreeMap<YearMonth, Vec<String>>,
    mode: MonthlyMode,
) -> Vec<MonthlyCoverage> {
    let corpus_wide = recommended_ids(sets);
    let by_query: HashMap<&str, &RecommendationSet> = sets.iter().map(|s| (s.query.as_str(), s)).collect();
    buckets
        .iter()
        .filter(|(_, ids)| !ids.is_empty())
        .map(|(&month, ids)| {
            let covered = match mode {
                MonthlyMode::CorpusWide => ids.iter().filter(|id| corpus_wide.contains(id.as_str())).count(),
                MonthlyMode::WithinMonth => {
                    let local: HashSet<&str> = ids
                        .iter()
                        .filter_map(|q| by_query.get(q.as_str()))
                        .flat_map(|s| s.ids())
                        .collect();
                    ids.iter().filter(|id| local.contains(id.as_str())).count()
                }
            };
            MonthlyCoverage {
                month,
                covered,
                total: ids.len(),
                coverage: ratio(covered, ids.len()),
            }
        })
        .collect()
}

/// Size-weighted mean of monthly coverage, evaluated on the integer counts.
pub fn size_weighted_mean(monthly: &[MonthlyCoverage]) -> f64 {
    let covered: usize = monthly.iter().map(|m| m.covered).sum();
    let total: usize = monthly.iter().map(|m| m.total).sum();
    ratio(covered, total)
}

/// Coverage after each prefix of `order` (query ids in processing order); one point per query.
pub fn cumulative_coverage(sets: &[RecommendationSet], order: &[String], n: usize) -> Result<Vec<CumulativePoint>> {
    if n == 0 {
        return Err(Error::InvalidParameter("coverage of an empty catalog is undefined".into()));
    }
    let by_query: HashMap<&str, &RecommendationSet> = sets.iter().map(|s| (s.query.as_str(), s)).collect();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut out = Vec::with_capacity(order.len());
    for (i, q) in order.iter().enumerate() {
        let set = by_query
            .get(q.as_str())
            .ok_or_else(|| Error::UnknownVideo(q.clone()))?;
        seen.extend(set.ids());
        out.push(CumulativePoint {
            processed: i + 1,
            covered: seen.len(),
            coverage: ratio(seen.len(), n),
        });
    }
    Ok(out)
}

pub fn coverage_by_size(recommender: &Recommender, ks: &[usize], mode: FilterMode) -> Result<Vec<SizeCoverage>> {
    if ks.is_empty() {
        return Err(Error::InvalidParameter("no recommendation sizes given".into()));
    }
    let n = recommender.len();
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .map(|k| {
            let sets = recommender.recommend_all(k, mode)?;
            let covered = recommended_ids(&sets).len();
            if n == 0 {
                return Err(Error::InvalidParameter("coverage of an empty catalog is undefined".into()));
            }
            Ok(SizeCoverage {
                k,
                covered,
                coverage: ratio(covered, n),
            })
        })
        .collect()
}

/// All four metrics for one run. `sets` must come from `recommender` at size `k`,
/// and the recommender must cover exactly the corpus videos.
pub fn coverage_report(
    recommender: &Recommender,
    sets: &[RecommendationSet],
    k: usize,
    corpus: &Corpus,
    ks: &[usize],
    mode: FilterMode,
    monthly_mode: MonthlyMode,
) -> Result<CoverageReport> {
    let n = recommender.len();
    let buckets = month_buckets(corpus);
    let order = corpus.ids();
    let covered = recommended_ids(sets).len();
    Ok(CoverageReport {
        k,
        total: n,
        covered,
        aggregate: aggregate_coverage(sets, n)?,
        monthly: coverage_over_time(sets, &buckets, monthly_mode),
        cumulative: cumulative_coverage(sets, &order, n)?,
        by_size: coverage_by_size(recommender, ks, mode)?,
    })
}
