//! Lexicon-and-rules sentiment scoring.
//!
//! Each lexicon hit contributes its valence, adjusted by the rules below, to a
//! running sum `s`; the compound score is `s / sqrt(s^2 + 15)`.
//!
//! * all-caps hit, when the sentiment-bearing tokens mix caps and non-caps:
//!   `|v| += 0.733`
//! * booster/dampener in the 3 preceding tokens: `v += inc * sign(v) * scale`,
//!   with `scale` 1.0, 0.95, 0.9 for distance 1, 2, 3
//! * negator in the 3 preceding tokens: `v *= -0.74`
//! * each `!` (at most 4): `|s| += 0.292`

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::TokenStream;

const BUNDLED_LEXICON: &str = include_str!("../data/sentiment_lexicon.tsv");
const BUNDLED_BOOSTERS: &str = include_str!("../data/boosters.tsv");
const BUNDLED_NEGATORS: &str = include_str!("../data/negators.txt");

pub const NORMALIZATION_ALPHA: f64 = 15.0;
pub const NEGATION_SCALAR: f64 = -0.74;
pub const CAPS_INCREMENT: f64 = 0.733;
pub const EXCLAMATION_INCREMENT: f64 = 0.292;
pub const MAX_EXCLAMATIONS: usize = 4;
pub const MODIFIER_WINDOW: usize = 3;
const DISTANCE_SCALE: [f64; MODIFIER_WINDOW] = [1.0, 0.95, 0.9];

/// Parses `term<TAB>value` lines; `#` starts a comment line. Later duplicates win.
pub(crate) fn parse_weighted_terms(text: &str, origin: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_string(),
            line: i + 1,
            message,
        };
        let (term, value) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `term<TAB>value`".into()))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad number `{}`", value.trim())))?;
        if !value.is_finite() {
            return Err(parse_err(format!("non-finite value for `{term}`")));
        }
        out.push((term.trim().to_lowercase(), value));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SentimentLexicon {
    valences: HashMap<String, f64>,
    boosters: HashMap<String, f64>,
    negators: HashSet<String>,
}

impl SentimentLexicon {
    /// Bundled valence lexicon with the bundled booster and negator sets.
    pub fn bundled() -> Self {
        Self::from_text(BUNDLED_LEXICON, "<bundled lexicon>").expect("bundled lexicon is valid")
    }

    /// Valences from `path`; boosters and negators stay the bundled ones.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let valences = parse_weighted_terms(text, origin)?;
        let boosters = parse_weighted_terms(BUNDLED_BOOSTERS, "<bundled boosters>")?;
        let negators = BUNDLED_NEGATORS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string);
        Self::new(valences, boosters, negators)
    }

    pub fn new(
        valences: impl IntoIterator<Item = (String, f64)>,
        boosters: impl IntoIterator<Item = (String, f64)>,
        negators: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let valences: HashMap<String, f64> = valences.into_iter().collect();
        if let Some((t, v)) = valences.iter().find(|(_, v)| !(-4.0..=4.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "valence of `{t}` is {v}, outside [-4, 4]"
            )));
        }
        let boosters: HashMap<String, f64> = boosters.into_iter().collect();
        if let Some((t, v)) = boosters.iter().find(|(_, v)| !(v.is_finite() && v.abs() < 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "booster increment of `{t}` is {v}, must satisfy |inc| < 1"
            )));
        }
        Ok(SentimentLexicon {
            valences,
            boosters,
            negators: negators.into_iter().collect(),
        })
    }

    pub fn valence(&self, term: &str) -> Option<f64> {
        self.valences.get(term).copied()
    }

    pub fn booster(&self, term: &str) -> Option<f64> {
        self.boosters.get(term).copied()
    }

    pub fn is_negator(&self, term: &str) -> bool {
        self.negators.contains(term)
    }

    pub fn len(&self) -> usize {
        self.valences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valences.is_empty()
    }

    /// Same lexicon with every valence negated.
    pub fn mirrored(&self) -> Self {
        SentimentLexicon {
            valences: self.valences.iter().map(|(t, v)| (t.clone(), -v)).collect(),
            boosters: self.boosters.clone(),
            negators: self.negators.clone(),
        }
    }

    fn is_modifier(&self, term: &str) -> bool {
        self.boosters.contains_key(term) || self.negators.contains(term)
    }

    fn bears_sentiment(&self, term: &str) -> bool {
        self.is_modifier(term) || self.valences.contains_key(term)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Rule-adjusted valence sum before normalization.
pub fn valence_sum(stream: &TokenStream, lexicon: &SentimentLexicon) -> f64 {
    let tokens = &stream.tokens;
    let emphasis = |i: usize| stream.emphasis.get(i).copied().unwrap_or(false);

    let (mut caps, mut plain) = (false, false);
    for (i, t) in tokens.iter().enumerate() {
        if lexicon.bears_sentiment(t) {
            if emphasis(i) {
                caps = true;
            } else {
                plain = true;
            }
        }
    }
    let caps_differential = caps && plain;

    let mut sum = 0.0;
    for (i, t) in tokens.iter().enumerate() {
        if lexicon.is_modifier(t) {
            continue;
        }
        let Some(mut v) = lexicon.valence(t) else {
            continue;
        };
        let dir = sign(v);
        if caps_differential && emphasis(i) {
            v += CAPS_INCREMENT * dir;
        }
        let mut negated = false;
        for dist in 1..=MODIFIER_WINDOW.min(i) {
            let prev = tokens[i - dist].as_str();
            if let Some(inc) = lexicon.booster(prev) {
                v += inc * dir * DISTANCE_SCALE[dist - 1];
            }
            negated |= lexicon.is_negator(prev);
        }
        if negated {
            v *= NEGATION_SCALAR;
        }
        sum += v;
    }
    if sum != 0.0 {
        let bangs = stream.exclamations.min(MAX_EXCLAMATIONS) as f64;
        sum += sign(sum) * EXCLAMATION_INCREMENT * bangs;
    }
    sum
}

pub fn normalize(sum: f64) -> f64 {
    sum / (sum * sum + NORMALIZATION_ALPHA).sqrt()
}

pub fn score_compound(stream: &TokenStream, lexicon: &SentimentLexicon) -> f64 {
    normalize(valence_sum(stream, lexicon))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentClass {
    Positive,
    Neutral,
    Negative,
}

impl SentimentClass {
    pub const ALL: [SentimentClass; 3] = [Self::Positive, Self::Neutral, Self::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Neutral => "neutral",
            Self::Negative => "negative",
        }
    }
}

impl std::str::FromStr for SentimentClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Self::Positive),
            "neutral" => Ok(Self::Neutral),
            "negative" => Ok(Self::Negative),
            other => Err(Error::InvalidParameter(format!("unknown sentiment class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentimentThresholds {
    pub positive: f64,
    pub negative: f64,
}

impl Default for SentimentThresholds {
    fn default() -> Self {
        SentimentThresholds {
            positive: 0.05,
            negative: -0.05,
        }
    }
}

impl SentimentThresholds {
    pub fn new(positive: f64, negative: f64) -> Result<Self> {
        let t = SentimentThresholds { positive, negative };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.negative < self.positive {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "sentiment thresholds need negative < positive, got ({}, {})",
                self.positive, self.negative
            )))
        }
    }
}

pub fn classify_sentiment(compound: f64, thresholds: &SentimentThresholds) -> Result<SentimentClass> {
    thresholds.validate()?;
    Ok(if compound >= thresholds.positive {
        SentimentClass::Positive
    } else if compound <= thresholds.negative {
        SentimentClass::Negative
    } else {
        SentimentClass::Neutral
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentResult {
    pub compound: f64,
    pub class: SentimentClass,
}

pub fn analyze(
    stream: &TokenStream,
    lexicon: &SentimentLexicon,
    thresholds: &SentimentThresholds,
) -> Result<SentimentResult> {
    let compound = score_compound(stream, lexicon);
    Ok(SentimentResult {
        compound,
        class: classify_sentiment(compound, thresholds)?,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub count: usize,
    pub percent: f64,
}

impl ClassShare {
    pub(crate) fn of(count: usize, total: usize) -> Self {
        let percent = if total == 0 {
            0.0
        } else {
            count as f64 * 100.0 / total as f64
        };
        ClassShare { count, percent }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SentimentDistribution {
    pub total: usize,
    pub positive: ClassShare,
    pub neutral: ClassShare,
    pub negative: ClassShare,
}

pub fn sentiment_distribution<I>(classes: I) -> SentimentDistribution
where
    I: IntoIterator<Item = SentimentClass>,
{
    let (mut pos, mut neu, mut neg) = (0, 0, 0);
    for c in classes {
        match c {
            SentimentClass::Positive => pos += 1,
            SentimentClass::Neutral => neu += 1,
            SentimentClass::Negative => neg += 1,
        }
    }
    let total = pos + neu + neg;
    SentimentDistribution {
        total,
        positive: ClassShare::of(pos, total),
        neutral: ClassShare::of(neu, total),
        negative: ClassShare::of(neg, total),
    }
}
