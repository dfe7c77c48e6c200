use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingsFormat {
    Tsv,
    Csv,
}

impl RatingsFormat {
    fn delimiter(self) -> u8 {
        match self {
            RatingsFormat::Tsv => b'\t',
            RatingsFormat::Csv => b',',
        }
    }
}

impl FromStr for RatingsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(RatingsFormat::Tsv),
            "csv" => Ok(RatingsFormat::Csv),
            other => Err(Error::invalid(format!("unknown ratings format `{other}` (expected tsv or csv)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingRecord {
    pub user: String,
    pub item: String,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawRatings {
    pub records: Vec<RatingRecord>,
    /// Rows skipped as malformed (only non-zero when tolerated by [`IngestOptions`]).
    pub malformed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestOptions {
    /// Malformed rows tolerated before ingestion fails. Default 0: any malformed row is an error.
    pub max_malformed: usize,
}

pub fn ingest_ratings(path: &Path, format: RatingsFormat) -> Result<RawRatings> {
    ingest_ratings_with(path, format, IngestOptions::default())
}

pub fn ingest_ratings_with(path: &Path, format: RatingsFormat, opts: IngestOptions) -> Result<RawRatings> {
    let file = File::open(path).map_err(|e| Error::input(format!("cannot open {}: {e}", path.display())))?;
    parse_ratings(BufReader::new(file), format, opts)
}

/// Parses `user, item, rating[, timestamp]` rows.
///
/// The first row is a header when its rating field is not numeric and none of
/// its fields contains a digit (`userId,movieId,rating,timestamp`).
pub fn parse_ratings<R: Read>(reader: R, format: RatingsFormat, opts: IngestOptions) -> Result<RawRatings> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut out = RawRatings::default();
    for (k, row) in rdr.records().enumerate() {
        let row_no = k + 1;
        let row = row.map_err(|e| Error::input_at(row_no, format!("unreadable row: {e}")))?;
        if row_no == 1 && looks_like_header(&row) {
            continue;
        }
        match parse_row(&row) {
            Ok(rec) => out.records.push(rec),
            Err(msg) => {
                out.malformed += 1;
                if out.malformed > opts.max_malformed {
                    return Err(Error::input_at(row_no, msg));
                }
            }
        }
    }
    Ok(out)
}

fn looks_like_header(row: &csv::StringRecord) -> bool {
    row.len() >= 3
        && row[2].parse::<f64>().is_err()
        && row.iter().all(|f| !f.bytes().any(|b| b.is_ascii_digit()))
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<RatingRecord, String> {
    if row.len() < 3 {
        return Err(format!("expected at least 3 fields, found {}", row.len()));
    }
    let (user, item) = (&row[0], &row[1]);
    if user.is_empty() || item.is_empty() {
        return Err("empty user or item id".into());
    }
    let rating: f64 = row[2].parse().map_err(|_| format!("unparsable rating `{}`", &row[2]))?;
    if !rating.is_finite() {
        return Err(format!("non-finite rating `{}`", &row[2]));
    }
    let timestamp = match row.get(3) {
        None | Some("") => None,
        Some(t) => Some(t.parse::<i64>().map_err(|_| format!("unparsable timestamp `{t}`"))?),
    };
    Ok(RatingRecord { user: user.to_string(), item: item.to_string(), rating, timestamp })
}
