//! Tokenization, stopwords and vocabulary construction.
//!
//! Token rule: runs of alphanumeric characters, keeping internal `-` and `'`
//! (so `covid-19` and `don't` survive) and a leading `#` on hashtags.
//! Scheme-prefixed URLs and `@handles` are removed before splitting. Tokens
//! are always lowercased; the all-caps surface form is kept as a per-token
//! emphasis flag, and `!` / `?` are counted, both for the sentiment scorer.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepOptions {
    pub capture_emphasis: bool,
    pub min_df: usize,
    /// Upper document-frequency bound as a fraction of the document count.
    pub max_df: f64,
    /// Replaces the bundled English list when set.
    pub stopwords: Option<PathBuf>,
}

impl Default for PrepOptions {
    fn default() -> Self {
        PrepOptions {
            capture_emphasis: true,
            min_df: 2,
            max_df: 0.95,
            stopwords: None,
        }
    }
}

impl PrepOptions {
    pub fn vocabulary_filter(&self) -> Result<VocabularyFilter> {
        let stopwords = match &self.stopwords {
            Some(p) => Stopwords::from_file(p)?,
            None => Stopwords::english(),
        };
        VocabularyFilter::new(self.min_df, self.max_df, stopwords)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    /// Parallel to `tokens`: the surface form was all upper case.
    pub emphasis: Vec<bool>,
    pub exclamations: usize,
    pub questions: usize,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Lowercase tokens with no emphasis or punctuation information.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let emphasis = vec![false; tokens.len()];
        TokenStream {
            tokens,
            emphasis,
            exclamations: 0,
            questions: 0,
        }
    }
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z][A-Za-z0-9+.\-]*://\S*").unwrap())
}

fn handle_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").unwrap())
}

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '\u{2019}')
}

pub fn tokenize(text: &str, options: &PrepOptions) -> TokenStream {
    let no_urls = url_pattern().replace_all(text, " ");
    let cleaned = handle_pattern().replace_all(&no_urls, " ");

    let mut out = TokenStream {
        exclamations: cleaned.matches('!').count(),
        questions: cleaned.matches('?').count(),
        ..TokenStream::default()
    };

    let chars: Vec<char> = cleaned.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let hashtag = c == '#' && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if !(c.is_alphanumeric() || hashtag) {
            i += 1;
            continue;
        }
        let start = i;
        i += 1;
        while i < chars.len() {
            let c = chars[i];
            if c.is_alphanumeric() {
                i += 1;
            } else if is_joiner(c) && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric()) {
                i += 2;
            } else {
                break;
            }
        }
        let surface: String = chars[start..i]
            .iter()
            .map(|&c| if c == '\u{2019}' { '\'' } else { c })
            .collect();
        let emphasized = options.capture_emphasis && is_all_caps(&surface);
        out.tokens.push(surface.to_lowercase());
        out.emphasis.push(emphasized);
    }
    out
}

fn is_all_caps(surface: &str) -> bool {
    let mut letters = 0;
    for c in surface.chars().filter(|c| c.is_alphabetic()) {
        if !c.is_uppercase() {
            return false;
        }
        letters += 1;
    }
    letters >= 2
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn none() -> Self {
        Stopwords(HashSet::new())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(Into::into).collect())
    }
}

#[derive(Debug, Clone)]
pub struct VocabularyFilter {
    min_df: usize,
    max_df: f64,
    stopwords: Stopwords,
}

impl VocabularyFilter {
    pub fn new(min_df: usize, max_df: f64, stopwords: Stopwords) -> Result<Self> {
        if min_df < 1 {
            return Err(Error::InvalidParameter("min_df must be >= 1".into()));
        }
        if !(max_df > 0.0 && max_df <= 1.0) {
            return Err(Error::InvalidParameter(format!("max_df must be in (0, 1], got {max_df}")));
        }
        Ok(VocabularyFilter {
            min_df,
            max_df,
            stopwords,
        })
    }

    /// Keeps every term.
    pub fn unfiltered() -> Self {
        VocabularyFilter {
            min_df: 1,
            max_df: 1.0,
            stopwords: Stopwords::none(),
        }
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }
}

/// Term dictionary with dense ids assigned in lexicographic term order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: HashMap<String, u32>,
    df: Vec<u32>,
    n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self, id: u32) -> u32 {
        self.df[id as usize]
    }

    /// Number of documents the vocabulary was built from.
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

pub fn build_vocabulary<'a, I>(docs: I, filter: &VocabularyFilter) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    let mut n_docs = 0usize;
    let mut distinct: HashSet<&str> = HashSet::new();
    for doc in docs {
        n_docs += 1;
        distinct.clear();
        for t in doc {
            if !filter.stopwords.contains(t) {
                distinct.insert(t.as_str());
            }
        }
        for &t in &distinct {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let max_count = filter.max_df * n_docs as f64;
    let kept: Vec<(&str, u32)> = df
        .into_iter()
        .filter(|&(_, d)| d as usize >= filter.min_df && d as f64 <= max_count)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let terms: Vec<String> = kept.iter().map(|(t, _)| t.to_string()).collect();
    let ids = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    Ok(Vocabulary {
        terms,
        ids,
        df: kept.iter().map(|&(_, d)| d).collect(),
        n_docs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opts() -> PrepOptions {
        PrepOptions::default()
    }

    fn toks(s: &str) -> Vec<String> {
        tokenize(s, &opts()).tokens
    }

    #[test]
    fn empty_text() {
        let ts = tokenize("", &opts());
        assert!(ts.is_empty());
        assert_eq!(ts.exclamations, 0);
    }

    #[test]
    fn emphasis_and_punctuation() {
        let ts = tokenize("COVID-19 update!!", &opts());
        assert_eq!(ts.tokens, vec!["covid-19", "update"]);
        assert_eq!(ts.emphasis, vec![true, false]);
        assert_eq!(ts.exclamations, 2);
        assert_eq!(ts.questions, 0);

        let off = PrepOptions {
            capture_emphasis: false,
            ..opts()
        };
        assert_eq!(tokenize("COVID-19", &off).emphasis, vec![false]);
    }

    #[test]
    fn strips_urls_and_handles() {
        assert_eq!(toks("visit https://x.yz now"), vec!["visit", "now"]);
        assert_eq!(toks("thanks @who_news for #Covid19 info"), vec!["thanks", "for", "#covid19", "info"]);
        assert_eq!(toks("see http://a.b/c?d=1 ok?").len(), 2);
        assert_eq!(tokenize("see http://a.b/c?d=1 ok?", &opts()).questions, 1);
    }

    #[test]
    fn keeps_internal_joiners_only() {
        assert_eq!(toks("don't -stop- it's well-known"), vec!["don't", "stop", "it's", "well-known"]);
        assert_eq!(toks("it\u{2019}s"), vec!["it's"]);
        assert_eq!(toks("# alone"), vec!["alone"]);
        // single capital letters are not emphasis
        assert_eq!(tokenize("I A ok", &opts()).emphasis, vec![false, false, false]);
    }

    fn docs(raw: &[&str]) -> Vec<Vec<String>> {
        raw.iter().map(|d| toks(d)).collect()
    }

    #[test]
    fn vocabulary_unfiltered() {
        let d = docs(&["a b", "b c"]);
        let v = build_vocabulary(d.iter().map(Vec::as_slice), &VocabularyFilter::unfiltered()).unwrap();
        assert_eq!(v.terms(), &["a", "b", "c"]);
        assert_eq!((v.df(0), v.df(1), v.df(2)), (1, 2, 1));
    }

    #[test]
    fn vocabulary_min_df() {
        let d = docs(&["a b", "b c"]);
        let f = VocabularyFilter::new(2, 1.0, Stopwords::none()).unwrap();
        let v = build_vocabulary(d.iter().map(Vec::as_slice), &f).unwrap();
        assert_eq!(v.terms(), &["b"]);
    }

    #[test]
    fn vocabulary_max_df_and_stopwords() {
        let d = docs(&["the p x", "the q x", "the r"]);
        let f = VocabularyFilter::new(1, 0.7, Stopwords::english()).unwrap();
        let v = build_vocabulary(d.iter().map(Vec::as_slice), &f).unwrap();
        // x has df 2/3 <= 0.7, "the" is a stopword
        assert_eq!(v.terms(), &["p", "q", "r", "x"]);
        let f = VocabularyFilter::new(1, 0.5, Stopwords::english()).unwrap();
        let v = build_vocabulary(d.iter().map(Vec::as_slice), &f).unwrap();
        assert_eq!(v.terms(), &["p", "q", "r"]);
    }

    #[test]
    fn vocabulary_empty_errors() {
        let d = docs(&["", "the of"]);
        let f = VocabularyFilter::new(1, 1.0, Stopwords::english()).unwrap();
        assert!(matches!(
            build_vocabulary(d.iter().map(Vec::as_slice), &f),
            Err(Error::EmptyVocabulary)
        ));
        assert!(VocabularyFilter::new(0, 1.0, Stopwords::none()).is_err());
        assert!(VocabularyFilter::new(1, 0.0, Stopwords::none()).is_err());
    }

    #[test]
    fn bundled_stopwords_cover_negators() {
        let s = Stopwords::english();
        assert!(s.len() > 300);
        assert!(s.contains("not") && s.contains("the"));
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec![
            "a", "b", "c", "d", "e", "f", "g", "h", "covid", "vaccine", "news", "x", "y", "z",
        ])
        .prop_map(str::to_string)
    }

    proptest! {
        #[test]
        fn tokenize_idempotent_on_output(text in "[A-Za-zé0-9#@!?'\\- ]{0,60}") {
            let once = tokenize(&text, &opts());
            let again = tokenize(&once.tokens.join(" "), &opts());
            prop_assert_eq!(&once.tokens, &again.tokens);
            prop_assert_eq!(once.tokens.len(), once.emphasis.len());
            prop_assert!(once.tokens.iter().all(|t| !t.is_empty()));
        }

        #[test]
        fn df_matches_brute_force(
            corpus in prop::collection::vec(prop::collection::vec(word(), 0..12), 1..100),
            min_df in 1usize..4,
        ) {
            let f = VocabularyFilter::new(min_df, 1.0, Stopwords::none()).unwrap();
            match build_vocabulary(corpus.iter().map(Vec::as_slice), &f) {
                Ok(v) => {
                    let mut expected: Vec<(String, u32)> = Vec::new();
                    let mut all: Vec<&String> = corpus.iter().flatten().collect();
                    all.sort();
                    all.dedup();
                    for t in all {
                        let df = corpus.iter().filter(|d| d.contains(t)).count() as u32;
                        if df as usize >= min_df {
                            expected.push((t.clone(), df));
                        }
                    }
                    let got: Vec<(String, u32)> =
                        (0..v.len() as u32).map(|i| (v.term(i).to_string(), v.df(i))).collect();
                    prop_assert_eq!(&got, &expected);
                    for (i, t) in v.terms().iter().enumerate() {
                        prop_assert_eq!(v.id(t), Some(i as u32));
                    }
                    let sum_df: u64 = (0..v.len() as u32).map(|i| v.df(i) as u64).sum();
                    let sum_distinct: u64 = corpus
                        .iter()
                        .map(|d| {
                            let s: HashSet<&String> = d.iter().filter(|t| v.id(t).is_some()).collect();
                            s.len() as u64
                        })
                        .sum();
                    prop_assert_eq!(sum_df, sum_distinct);
                    let again = build_vocabulary(corpus.iter().map(Vec::as_slice), &f).unwrap();
                    prop_assert_eq!(v, again);
                }
                Err(Error::EmptyVocabulary) => {
                    let any = corpus.iter().flatten().any(|t| {
                        corpus.iter().filter(|d| d.contains(t)).count() >= min_df
                    });
                    prop_assert!(!any);
                }
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
