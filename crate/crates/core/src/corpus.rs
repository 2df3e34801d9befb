//! Video dataset loading, validation and month bucketing.
//!
//! The on-disk format is a UTF-8 CSV with a header row. Only `video_id`,
//! `title`, `description` and `publish_date` are required; the remaining
//! columns default to zero / empty / `"und"`. Multi-valued cells (`categories`,
//! `tags`) hold their elements separated by `|`.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REQUIRED_COLUMNS: [&str; 4] = ["video_id", "title", "description", "publish_date"];

pub const ALL_COLUMNS: [&str; 12] = [
    "video_id",
    "url",
    "title",
    "description",
    "publish_date",
    "view_count",
    "like_count",
    "comment_count",
    "duration_seconds",
    "categories",
    "tags",
    "language",
];

const LIST_SEP: char = '|';
const DEFAULT_LANGUAGE: &str = "und";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub url: String,
    pub title: String,
    pub description: String,
    pub publish_date: NaiveDate,
    pub view_count: u64,
    pub like_count: u64,
    pub comment_count: u64,
    pub duration_seconds: u64,
    pub categories: Vec<String>,
    pub tags: Vec<String>,
    pub language: String,
}

impl VideoRecord {
    /// Minimal record with defaults for every optional field.
    pub fn new(
        video_id: impl Into<String>,
        title: impl Into<String>,
        description: impl Into<String>,
        publish_date: NaiveDate,
    ) -> Self {
        VideoRecord {
            video_id: video_id.into(),
            url: String::new(),
            title: title.into(),
            description: description.into(),
            publish_date,
            view_count: 0,
            like_count: 0,
            comment_count: 0,
            duration_seconds: 0,
            categories: Vec::new(),
            tags: Vec::new(),
            language: DEFAULT_LANGUAGE.to_string(),
        }
    }

    /// Title and description joined by a single space; the recommender's input text.
    pub fn combined_text(&self) -> String {
        let mut s = String::with_capacity(self.title.len() + self.description.len() + 1);
        s.push_str(&self.title);
        s.push(' ');
        s.push_str(&self.description);
        s
    }

    pub fn year_month(&self) -> YearMonth {
        YearMonth::of(self.publish_date)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Self {
        YearMonth { year, month }
    }

    pub fn of(date: NaiveDate) -> Self {
        YearMonth {
            year: date.year(),
            month: date.month(),
        }
    }
}

impl std::fmt::Display for YearMonth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// An immutable, ordered, indexed set of videos.
///
/// Records are kept sorted by `(publish_date, video_id)`, so iteration order
/// depends only on record content, never on input row order.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<VideoRecord>,
    index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from records in any order. Fails on empty or duplicate ids.
    pub fn from_records(mut records: Vec<VideoRecord>) -> Result<Self> {
        records.sort_by(|a, b| {
            a.publish_date
                .cmp(&b.publish_date)
                .then_with(|| a.video_id.cmp(&b.video_id))
        });
        let mut index = HashMap::with_capacity(records.len());
        for (pos, r) in records.iter().enumerate() {
            if r.video_id.is_empty() {
                return Err(Error::InvalidParameter("empty video_id".into()));
            }
            if index.insert(r.video_id.clone(), pos).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate video_id `{}`",
                    r.video_id
                )));
            }
        }
        Ok(Corpus { records, index })
    }

    pub fn records(&self) -> &[VideoRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, video_id: &str) -> Option<&VideoRecord> {
        self.index.get(video_id).map(|&i| &self.records[i])
    }

    pub fn position(&self, video_id: &str) -> Option<usize> {
        self.index.get(video_id).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, VideoRecord> {
        self.records.iter()
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.video_id.clone()).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(ALL_COLUMNS)?;
        for r in &self.records {
            w.write_record([
                r.video_id.as_str(),
                r.url.as_str(),
                r.title.as_str(),
                r.description.as_str(),
                &r.publish_date.format("%Y-%m-%d").to_string(),
                &r.view_count.to_string(),
                &r.like_count.to_string(),
                &r.comment_count.to_string(),
                &r.duration_seconds.to_string(),
                &join_list(&r.categories),
                &join_list(&r.tags),
                r.language.as_str(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<corpus writer>", e))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a VideoRecord;
    type IntoIter = std::slice::Iter<'a, VideoRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Abort on the first bad row instead of skipping it.
    pub strict: bool,
}

#[derive(Debug)]
pub struct LoadReport {
    pub corpus: Corpus,
    /// Row-level rejections (always empty in strict mode, which fails instead).
    pub rejected: Vec<Error>,
}

pub fn load_corpus(path: impl AsRef<Path>, options: &LoadOptions) -> Result<LoadReport> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(std::io::BufReader::new(file), options)
}

pub fn read_corpus<R: Read>(reader: R, options: &LoadOptions) -> Result<LoadReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    for name in REQUIRED_COLUMNS {
        if column(name).is_none() {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    let cols: Vec<Option<usize>> = ALL_COLUMNS.iter().map(|c| column(c)).collect();

    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut rejected = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        // header is row 1
        let row_no = i + 2;
        let parsed = row
            .map_err(Error::from)
            .and_then(|row| parse_row(&row, &cols, row_no))
            .and_then(|rec| match seen.get(&rec.video_id) {
                Some(first) => Err(Error::row(
                    row_no,
                    "video_id",
                    format!("duplicate of row {first}: `{}`", rec.video_id),
                )),
                None => Ok(rec),
            });
        match parsed {
            Ok(rec) => {
                seen.insert(rec.video_id.clone(), row_no);
                records.push(rec);
            }
            Err(e) if options.strict => return Err(e),
            Err(e) => rejected.push(e),
        }
    }
    let corpus = Corpus::from_records(records)?;
    Ok(LoadReport { corpus, rejected })
}

fn parse_row(row: &csv::StringRecord, cols: &[Option<usize>], row_no: usize) -> Result<VideoRecord> {
    let cell = |slot: usize| cols[slot].and_then(|c| row.get(c)).unwrap_or("");
    let count = |slot: usize| -> Result<u64> {
        let raw = cell(slot).trim();
        if raw.is_empty() {
            return Ok(0);
        }
        if raw.starts_with('-') {
            return Err(Error::row(row_no, ALL_COLUMNS[slot], format!("negative count `{raw}`")));
        }
        raw.parse::<u64>().map_err(|_| {
            Error::row(row_no, ALL_COLUMNS[slot], format!("not a non-negative integer: `{raw}`"))
        })
    };

    let video_id = cell(0).trim().to_string();
    if video_id.is_empty() {
        return Err(Error::row(row_no, "video_id", "empty video_id"));
    }
    let publish_date = parse_date(cell(4))
        .ok_or_else(|| Error::row(row_no, "publish_date", format!("unparseable date `{}`", cell(4))))?;
    let language = match cell(11).trim() {
        "" => DEFAULT_LANGUAGE.to_string(),
        s => s.to_string(),
    };

    Ok(VideoRecord {
        video_id,
        url: cell(1).to_string(),
        title: cell(2).to_string(),
        description: cell(3).to_string(),
        publish_date,
        view_count: count(5)?,
        like_count: count(6)?,
        comment_count: count(7)?,
        duration_seconds: count(8)?,
        categories: split_list(cell(9)),
        tags: split_list(cell(10)),
        language,
    })
}

/// ISO-8601 calendar date; anything after a `T` or space separator is ignored.
pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    let date_part = raw.split(['T', ' ']).next().unwrap_or("");
    NaiveDate::parse_from_str(date_part, "%Y-%m-%d").ok()
}

fn split_list(cell: &str) -> Vec<String> {
    cell.split(LIST_SEP)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn join_list(items: &[String]) -> String {
    items.join("|")
}

/// Groups video ids by publish year-month, preserving corpus order inside each bucket.
pub fn month_buckets(corpus: &Corpus) -> BTreeMap<YearMonth, Vec<String>> {
    let mut buckets: BTreeMap<YearMonth, Vec<String>> = BTreeMap::new();
    for r in corpus {
        buckets.entry(r.year_month()).or_default().push(r.video_id.clone());
    }
    buckets
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    const HEADER: &str = "video_id,url,title,description,publish_date,view_count,like_count,comment_count,duration_seconds,categories,tags,language\n";

    #[test]
    fn header_only_is_empty() {
        let rep = read_corpus(HEADER.as_bytes(), &LoadOptions::default()).unwrap();
        assert!(rep.corpus.is_empty());
        assert!(rep.rejected.is_empty());
    }

    #[test]
    fn single_row_round_trips_fields() {
        let data = format!(
            "{HEADER}abc123,https://www.youtube.com/watch?v=abc123,\"Covid, update\",\"Line one\nline \"\"two\"\"\",2023-03-04,10,2,1,61,News & Politics|Education,covid|vaccine,en\n"
        );
        let rep = read_corpus(data.as_bytes(), &LoadOptions::default()).unwrap();
        let r = &rep.corpus.records()[0];
        assert_eq!(r.video_id, "abc123");
        assert_eq!(r.url, "https://www.youtube.com/watch?v=abc123");
        assert_eq!(r.title, "Covid, update");
        assert_eq!(r.description, "Line one\nline \"two\"");
        assert_eq!(r.publish_date, date(2023, 3, 4));
        assert_eq!((r.view_count, r.like_count, r.comment_count, r.duration_seconds), (10, 2, 1, 61));
        assert_eq!(r.categories, vec!["News & Politics", "Education"]);
        assert_eq!(r.tags, vec!["covid", "vaccine"]);
        assert_eq!(r.language, "en");
    }

    #[test]
    fn negative_count_names_row_and_field() {
        let data = format!("{HEADER}a,,t,d,2023-01-01,1,-3,0,0,,,\n");
        let err = read_corpus(data.as_bytes(), &LoadOptions { strict: true }).unwrap_err();
        match err {
            Error::Row { row, field, .. } => {
                assert_eq!(row, 2);
                assert_eq!(field, "like_count");
            }
            other => panic!("unexpected {other:?}"),
        }
        let rep = read_corpus(data.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(rep.corpus.len(), 0);
        assert_eq!(rep.rejected.len(), 1);
    }

    #[test]
    fn bad_date_and_duplicates_rejected_individually() {
        let data = "video_id,title,description,publish_date\n\
                    a,t,d,2023-01-01\n\
                    b,t,d,2023-13-01\n\
                    a,t,d,2023-01-02\n\
                    c,t,d,2023-02-01T10:00:00Z\n";
        let rep = read_corpus(data.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(rep.corpus.ids(), vec!["a", "c"]);
        assert_eq!(rep.rejected.len(), 2);
        let msgs: Vec<String> = rep.rejected.iter().map(|e| e.to_string()).collect();
        assert!(msgs[0].contains("row 3") && msgs[0].contains("publish_date"));
        assert!(msgs[1].contains("row 4") && msgs[1].contains("video_id"));
        assert_eq!(rep.corpus.get("c").unwrap().language, "und");
    }

    #[test]
    fn missing_required_column_is_fatal() {
        let data = "video_id,title,publish_date\na,t,2023-01-01\n";
        let err = read_corpus(data.as_bytes(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "description"));
    }

    #[test]
    fn ordering_is_date_then_id() {
        let recs = vec![
            VideoRecord::new("z", "", "", date(2023, 1, 1)),
            VideoRecord::new("b", "", "", date(2023, 1, 2)),
            VideoRecord::new("a", "", "", date(2023, 1, 2)),
        ];
        let c = Corpus::from_records(recs).unwrap();
        assert_eq!(c.ids(), vec!["z", "a", "b"]);
        assert_eq!(c.position("b"), Some(2));
    }

    #[test]
    fn buckets_by_month() {
        assert!(month_buckets(&Corpus::default()).is_empty());
        let c = Corpus::from_records(vec![
            VideoRecord::new("x", "", "", date(2023, 1, 5)),
            VideoRecord::new("y", "", "", date(2023, 1, 20)),
            VideoRecord::new("w", "", "", date(2023, 2, 1)),
        ])
        .unwrap();
        let b = month_buckets(&c);
        assert_eq!(b.len(), 2);
        assert_eq!(b[&YearMonth::new(2023, 1)], vec!["x", "y"]);
        assert_eq!(b[&YearMonth::new(2023, 2)], vec!["w"]);
    }

    #[test]
    fn jan_2023_to_oct_2024_span() {
        let mut months = Vec::new();
        let (mut y, mut m) = (2023, 1);
        while (y, m) <= (2024, 10) {
            months.push((y, m));
            m += 1;
            if m > 12 {
                m = 1;
                y += 1;
            }
        }
        assert_eq!(months.len(), 22);
        let recs = months
            .iter()
            .enumerate()
            .map(|(i, &(y, m))| VideoRecord::new(format!("v{i:02}"), "", "", date(y, m, 15)))
            .collect();
        let b = month_buckets(&Corpus::from_records(recs).unwrap());
        assert_eq!(b.len(), 22);
        assert!(b.values().all(|ids| ids.len() == 1));
    }
}
