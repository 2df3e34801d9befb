//! Toxicity scoring and threshold classification.
//!
//! Scores come from an external file of precomputed model outputs when one
//! is supplied, otherwise from the bundled lexicon baseline
//! `m / (m + 2.0)` over the summed weights `m` of matched terms.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sentiment::{parse_weighted_terms, ClassShare};
use crate::textprep::TokenStream;

const BUNDLED_LEXICON: &str = include_str!("../data/toxicity_lexicon.tsv");

/// Toxic mass at which the baseline score reaches 0.5.
pub const HALF_SATURATION: f64 = 2.0;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct ToxicityLexicon {
    weights: HashMap<String, f64>,
}

impl ToxicityLexicon {
    pub fn bundled() -> Self {
        Self::from_text(BUNDLED_LEXICON, "<bundled toxicity lexicon>").expect("bundled lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        Self::new(parse_weighted_terms(text, origin)?)
    }

    pub fn new(weights: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let weights: HashMap<String, f64> = weights.into_iter().collect();
        if let Some((t, w)) = weights.iter().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "toxicity weight of `{t}` is {w}, must be > 0"
            )));
        }
        Ok(ToxicityLexicon { weights })
    }

    pub fn weight(&self, term: &str) -> Option<f64> {
        self.weights.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Saturating baseline score; permutation-invariant and monotone in the matched mass.
pub fn score_toxicity_lexicon(stream: &TokenStream, lexicon: &ToxicityLexicon) -> f64 {
    // sorted so the float sum does not depend on token order
    let mut matched: Vec<f64> = stream.tokens.iter().filter_map(|t| lexicon.weight(t)).collect();
    matched.sort_by(f64::total_cmp);
    let mass: f64 = matched.iter().sum();
    saturate(mass)
}

pub fn saturate(mass: f64) -> f64 {
    if mass <= 0.0 {
        0.0
    } else {
        mass / (mass + HALF_SATURATION)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToxicityClass {
    Toxic,
    NonToxic,
}

impl ToxicityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Toxic => "toxic",
            Self::NonToxic => "non_toxic",
        }
    }
}

impl std::str::FromStr for ToxicityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toxic" => Ok(Self::Toxic),
            "non_toxic" => Ok(Self::NonToxic),
            other => Err(Error::InvalidParameter(format!("unknown toxicity class `{other}`"))),
        }
    }
}

pub fn validate_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "toxicity threshold must be in (0, 1], got {threshold}"
        )))
    }
}

pub fn classify_toxicity(score: f64, threshold: f64) -> Result<ToxicityClass> {
    validate_threshold(threshold)?;
    Ok(if score >= threshold {
        ToxicityClass::Toxic
    } else {
        ToxicityClass::NonToxic
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToxicityResult {
    pub score: f64,
    pub class: ToxicityClass,
}

/// Externally produced scores keyed by video id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalScores(pub BTreeMap<String, f64>);

impl ExternalScores {
    pub fn get(&self, video_id: &str) -> Option<f64> {
        self.0.get(video_id).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Ids present in the file but not in `known`.
    pub fn unknown_ids<'a>(&'a self, known: impl Fn(&str) -> bool) -> Vec<&'a str> {
        self.0.keys().map(String::as_str).filter(|id| !known(id)).collect()
    }
}

pub fn load_external_scores(path: &Path) -> Result<ExternalScores> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_external_scores(file)
}

/// Reads a `video_id,score` table. An empty input yields an empty map.
pub fn read_external_scores<R: Read>(reader: R) -> Result<ExternalScores> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut scores = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let row_no = i + 1;
        let id = row.get(0).unwrap_or("").trim();
        let raw = row.get(1).unwrap_or("").trim();
        if row_no == 1 && id == "video_id" {
            continue;
        }
        if id.is_empty() {
            return Err(Error::row(row_no, "video_id", "empty video_id"));
        }
        let score: f64 = raw
            .parse()
            .map_err(|_| Error::row(row_no, "score", format!("`{id}`: not a number `{raw}`")))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::row(row_no, "score", format!("`{id}`: score {score} outside [0, 1]")));
        }
        if scores.insert(id.to_string(), score).is_some() {
            return Err(Error::row(row_no, "video_id", format!("duplicate video_id `{id}`")));
        }
    }
    Ok(ExternalScores(scores))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ToxicityDistribution {
    pub total: usize,
    pub toxic: ClassShare,
    pub non_toxic: ClassShare,
}

pub fn toxicity_distribution<I>(classes: I) -> ToxicityDistribution
where
    I: IntoIterator<Item = ToxicityClass>,
{
    let (mut toxic, mut clean) = (0, 0);
    for c in classes {
        match c {
            ToxicityClass::Toxic => toxic += 1,
            ToxicityClass::NonToxic => clean += 1,
        }
    }
    let total = toxic + clean;
    ToxicityDistribution {
        total,
        toxic: ClassShare::of(toxic, total),
        non_toxic: ClassShare::of(clean, total),
    }
}
