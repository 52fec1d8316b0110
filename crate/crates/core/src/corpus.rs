//! Post ingestion and thread reconstruction.
//!
//! Posts arrive as JSONL or CSV records with four string fields
//! (`id`, `source`, `created_at`, `text`). Consecutive posts of one account
//! that are closer than the configured gap are chained into a [`Thread`].

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default thread gap: posts strictly less than two minutes apart merge.
pub const DEFAULT_GAP_SECONDS: u64 = 120;

const FIELDS: [&str; 4] = ["id", "source", "created_at", "text"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub source: String,
    #[serde(with = "timestamp")]
    pub created_at: DateTime<Utc>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thread {
    pub source: String,
    #[serde(with = "timestamp")]
    pub start_at: DateTime<Utc>,
    pub member_ids: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl InputFormat {
    /// Picks the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InputFormat::Jsonl => "jsonl",
            InputFormat::Csv => "csv",
        }
    }
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown input format {other:?}"
            ))),
        }
    }
}

/// Serde adapter for `YYYY-MM-DDThh:mm:ssZ`.
pub(crate) mod timestamp {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("bad timestamp {raw:?}")))
    }
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Parses an ISO-8601 / RFC 3339 instant and normalizes it to UTC.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(raw.trim())
        .ok()
        .map(|ts| ts.with_timezone(&Utc))
}

/// Reads every post in `path`, validates it and returns the posts sorted by
/// `(source, created_at, id)`.
pub fn ingest(path: &Path, format: InputFormat) -> Result<Vec<Post>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let posts = match format {
        InputFormat::Jsonl => read_jsonl(BufReader::new(file), &origin)?,
        InputFormat::Csv => read_csv(file, &origin)?,
    };
    finish(posts)
}

/// Parses JSONL from memory, e.g. a body fetched over HTTP.
pub fn ingest_jsonl_str(text: &str, origin: &str) -> Result<Vec<Post>> {
    finish(read_jsonl(text.as_bytes(), origin)?)
}

/// Merges posts from several ingests, re-checking id uniqueness across them.
pub fn combine(batches: Vec<Vec<Post>>) -> Result<Vec<Post>> {
    finish(batches.into_iter().flatten().collect())
}

fn finish(mut posts: Vec<Post>) -> Result<Vec<Post>> {
    let mut seen = HashSet::with_capacity(posts.len());
    for post in &posts {
        if !seen.insert(post.id.as_str()) {
            return Err(Error::DuplicateId(post.id.clone()));
        }
    }
    sort_posts(&mut posts);
    Ok(posts)
}

pub fn sort_posts(posts: &mut [Post]) {
    posts.sort_by(|a, b| (&a.source, a.created_at, &a.id).cmp(&(&b.source, b.created_at, &b.id)));
}

fn read_jsonl<R: BufRead>(reader: R, origin: &str) -> Result<Vec<Post>> {
    let mut posts = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Record {
            origin: origin.to_string(),
            line: lineno,
            field: "*".into(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| Error::Record {
            origin: origin.to_string(),
            line: lineno,
            field: "*".into(),
            message: format!("invalid JSON: {e}"),
        })?;
        let object = value.as_object().ok_or_else(|| Error::Record {
            origin: origin.to_string(),
            line: lineno,
            field: "*".into(),
            message: "record is not a JSON object".into(),
        })?;
        let mut fields: [&str; 4] = [""; 4];
        for (slot, name) in fields.iter_mut().zip(FIELDS) {
            *slot = match object.get(name) {
                Some(serde_json::Value::String(s)) => s.as_str(),
                Some(_) => return Err(field_error(origin, lineno, name, "expected a string")),
                None => return Err(field_error(origin, lineno, name, "missing")),
            };
        }
        posts.push(build_post(fields, origin, lineno)?);
    }
    Ok(posts)
}

fn read_csv<R: Read>(reader: R, origin: &str) -> Result<Vec<Post>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| field_error(origin, 1, "*", &e.to_string()))?
        .clone();
    let mut columns = [0usize; 4];
    for (slot, name) in columns.iter_mut().zip(FIELDS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| field_error(origin, 1, name, "missing from header"))?;
    }
    let mut posts = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            field_error(origin, line, "*", &e.to_string())
        })?;
        let lineno = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut fields: [&str; 4] = [""; 4];
        for ((slot, name), col) in fields.iter_mut().zip(FIELDS).zip(columns) {
            *slot = record
                .get(col)
                .ok_or_else(|| field_error(origin, lineno, name, "missing"))?;
        }
        posts.push(build_post(fields, origin, lineno)?);
    }
    Ok(posts)
}

fn build_post(
    [id, source, created_at, text]: [&str; 4],
    origin: &str,
    line: usize,
) -> Result<Post> {
    if id.trim().is_empty() {
        return Err(field_error(origin, line, "id", "empty"));
    }
    validate_source(source).map_err(|msg| field_error(origin, line, "source", &msg))?;
    if text.trim().is_empty() {
        return Err(field_error(origin, line, "text", "empty after trimming"));
    }
    let created_at = parse_timestamp(created_at).ok_or_else(|| Error::Timestamp {
        origin: origin.to_string(),
        line,
        value: created_at.to_string(),
    })?;
    Ok(Post {
        id: id.to_string(),
        source: source.to_string(),
        created_at,
        text: text.to_string(),
    })
}

/// Source names become directory names in the output tree.
fn validate_source(source: &str) -> std::result::Result<(), String> {
    if source.trim().is_empty() {
        return Err("empty".into());
    }
    if source == "." || source == ".." || source.contains(['/', '\\', '\0']) {
        return Err(format!("{source:?} is not usable as a file name"));
    }
    Ok(())
}

fn field_error(origin: &str, line: usize, field: &str, message: &str) -> Error {
    Error::Record {
        origin: origin.to_string(),
        line,
        field: field.to_string(),
        message: message.to_string(),
    }
}

/// Chains consecutive same-source posts closer than `gap_seconds` into
/// threads. Each post is compared with its predecessor, so chains are
/// transitive; a gap of exactly `gap_seconds` starts a new thread.
pub fn merge_threads(posts: &[Post], gap_seconds: u64) -> Result<Vec<Thread>> {
    if gap_seconds == 0 {
        return Err(Error::InvalidConfig("gap_seconds must be positive".into()));
    }
    for (i, pair) in posts.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if (&a.source, a.created_at, &a.id) >= (&b.source, b.created_at, &b.id) {
            return Err(Error::Unsorted { position: i + 1 });
        }
    }

    let gap = i64::try_from(gap_seconds).unwrap_or(i64::MAX);
    let mut threads: Vec<Thread> = Vec::new();
    let mut prev: Option<&Post> = None;
    for post in posts {
        let joins = prev.is_some_and(|p| {
            p.source == post.source && (post.created_at - p.created_at).num_seconds() < gap
        });
        match threads.last_mut() {
            Some(thread) if joins => {
                thread.member_ids.push(post.id.clone());
                thread.text.push(' ');
                thread.text.push_str(&post.text);
            }
            _ => threads.push(Thread {
                source: post.source.clone(),
                start_at: post.created_at,
                member_ids: vec![post.id.clone()],
                text: post.text.clone(),
            }),
        }
        prev = Some(post);
    }
    Ok(threads)
}

pub fn write_threads(threads: &[Thread], path: &Path) -> Result<()> {
    crate::io::write_jsonl(path, threads)
}

pub fn read_threads(path: &Path) -> Result<Vec<Thread>> {
    crate::io::read_jsonl(path)
}
