//! Text normalization: thread text in, uppercase token sequence out.
//!
//! The rules run in a fixed order:
//!
//! 1. boilerplate phrases are cut from the raw text (longest phrase first),
//! 2. URLs, mentions, hashtags and retweet markers are dropped,
//! 3. punctuation is removed,
//! 4. the text is split on Unicode whitespace,
//! 5. stopwords are removed,
//! 6. configured compound names are joined with `_`,
//! 7. every token is uppercased.
//!
//! Nothing is stemmed or lemmatized. Compound entries that contain a
//! stopword (`são paulo`, `rio de janeiro`) are also matched on the token
//! stream just before step 5, otherwise step 5 would break them apart.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{timestamp, Thread};
use crate::error::{Error, Result};

pub const BUILTIN_STOPWORDS: &str = include_str!("../data/stopwords.txt");
pub const BUILTIN_BOILERPLATE: &str = include_str!("../data/boilerplate.txt");
pub const BUILTIN_MERGES: &str = include_str!("../data/merges.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripRules {
    pub urls: bool,
    pub mentions: bool,
    pub hashtags: bool,
    pub retweets: bool,
    pub punctuation: bool,
    pub digits: bool,
    /// Keep the body of a hashtag (`#Vacina` → `Vacina`) instead of
    /// dropping the whole token. Only consulted when `hashtags` is set.
    pub keep_hashtag_bodies: bool,
}

impl Default for StripRules {
    fn default() -> Self {
        StripRules {
            urls: true,
            mentions: true,
            hashtags: true,
            retweets: true,
            punctuation: true,
            digits: false,
            keep_hashtag_bodies: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compound {
    /// Lowercased words of the entry as written in the merge file.
    pub words: Vec<String>,
    /// The words that survive stopword removal.
    key: Vec<String>,
}

impl Compound {
    /// The merged token, e.g. `RIO_DE_JANEIRO`.
    pub fn token(&self) -> String {
        self.words.join("_").to_uppercase()
    }
}

#[derive(Debug, Clone)]
pub struct PrepConfig {
    stopwords: BTreeSet<String>,
    boilerplate: Vec<String>,
    compounds: Vec<Compound>,
    pub strip: StripRules,
    boilerplate_re: Option<Regex>,
}

impl PrepConfig {
    /// Validates and normalizes the three rule lists. Comparisons are
    /// case-insensitive, so everything is stored lowercased; duplicates
    /// are dropped keeping the first occurrence.
    pub fn new<S, P, M, W>(
        stopwords: S,
        boilerplate: P,
        merges: M,
        strip: StripRules,
    ) -> Result<Self>
    where
        S: IntoIterator<Item = W>,
        P: IntoIterator<Item = W>,
        M: IntoIterator<Item = Vec<W>>,
        W: AsRef<str>,
    {
        let stopwords: BTreeSet<String> = stopwords
            .into_iter()
            .map(|w| normalize(w.as_ref().trim()).to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();

        let mut seen = HashSet::new();
        let mut phrases = Vec::new();
        for phrase in boilerplate {
            let phrase = normalize(phrase.as_ref().trim());
            if !phrase.is_empty() && seen.insert(phrase.to_lowercase()) {
                phrases.push(phrase);
            }
        }

        let mut seen = HashSet::new();
        let mut compounds = Vec::new();
        for (idx, entry) in merges.into_iter().enumerate() {
            let words: Vec<String> = entry
                .iter()
                .map(|w| normalize(w.as_ref()).to_lowercase())
                .filter(|w| !w.is_empty())
                .collect();
            if words.len() < 2 {
                return Err(Error::ConfigEntry {
                    path: "merges".into(),
                    line: idx + 1,
                    message: format!("compound {:?} needs at least two words", words.join(" ")),
                });
            }
            if !seen.insert(words.clone()) {
                continue;
            }
            let key = words
                .iter()
                .filter(|w| !stopwords.contains(*w))
                .cloned()
                .collect();
            compounds.push(Compound { words, key });
        }

        let boilerplate_re = build_boilerplate_regex(&phrases)?;
        Ok(PrepConfig {
            stopwords,
            boilerplate: phrases,
            compounds,
            strip,
            boilerplate_re,
        })
    }

    /// The default rule set shipped with the crate.
    pub fn builtin() -> Self {
        let merges = parse_lines(BUILTIN_MERGES)
            .map(|(_, l)| l.split_whitespace().map(str::to_string).collect::<Vec<_>>());
        PrepConfig::new(
            parse_lines(BUILTIN_STOPWORDS).map(|(_, l)| l.to_string()),
            parse_lines(BUILTIN_BOILERPLATE).map(|(_, l)| l.to_string()),
            merges,
            StripRules::default(),
        )
        .expect("builtin preprocessing config is valid")
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn boilerplate(&self) -> &[String] {
        &self.boilerplate
    }

    pub fn compounds(&self) -> &[Compound] {
        &self.compounds
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(&word.to_lowercase())
    }
}

/// Paths of the three line-oriented rule files. `None` selects the
/// built-in list for that file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigPaths {
    pub stopwords: Option<PathBuf>,
    pub boilerplate: Option<PathBuf>,
    pub merges: Option<PathBuf>,
}

/// Reads the stopword, boilerplate and merge files into a validated
/// [`PrepConfig`].
pub fn load_config(paths: &ConfigPaths, strip: StripRules) -> Result<PrepConfig> {
    let read = |path: &Option<PathBuf>, builtin: &'static str| -> Result<(String, String)> {
        match path {
            Some(p) => Ok((crate::io::read_string(p)?, p.display().to_string())),
            None => Ok((builtin.to_string(), "<builtin>".to_string())),
        }
    };
    let (stop_text, _) = read(&paths.stopwords, BUILTIN_STOPWORDS)?;
    let (boiler_text, _) = read(&paths.boilerplate, BUILTIN_BOILERPLATE)?;
    let (merge_text, merge_origin) = read(&paths.merges, BUILTIN_MERGES)?;

    let mut merges = Vec::new();
    for (line, entry) in parse_lines(&merge_text) {
        let words: Vec<String> = entry.split_whitespace().map(str::to_string).collect();
        if words.len() < 2 {
            return Err(Error::ConfigEntry {
                path: merge_origin,
                line,
                message: format!("compound {entry:?} needs at least two words"),
            });
        }
        merges.push(words);
    }
    PrepConfig::new(
        parse_lines(&stop_text).map(|(_, l)| l.to_string()),
        parse_lines(&boiler_text).map(|(_, l)| l.to_string()),
        merges,
        strip,
    )
    .map_err(|e| match e {
        Error::ConfigEntry { line, message, .. } => Error::ConfigEntry {
            path: merge_origin.clone(),
            line,
            message,
        },
        other => other,
    })
}

/// Non-empty trimmed lines with their 1-based line numbers.
fn parse_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().trim_start_matches('\u{feff}')))
        .filter(|(_, l)| !l.is_empty())
}

fn normalize(text: &str) -> String {
    text.nfc().collect()
}

fn build_boilerplate_regex(phrases: &[String]) -> Result<Option<Regex>> {
    if phrases.is_empty() {
        return Ok(None);
    }
    let mut sorted: Vec<&String> = phrases.iter().collect();
    // Alternation is leftmost-first, so longer phrases must come first.
    sorted.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
    let alternatives: Vec<String> = sorted
        .iter()
        .map(|p| {
            let starts_word = p.chars().next().is_some_and(is_word_char);
            let ends_word = p.chars().last().is_some_and(is_word_char);
            format!(
                "{}{}{}",
                if starts_word { r"\b" } else { "" },
                regex::escape(p),
                if ends_word { r"\b" } else { "" }
            )
        })
        .collect();
    let pattern = format!("(?i)(?:{})", alternatives.join("|"));
    Regex::new(&pattern)
        .map(Some)
        .map_err(|e| Error::InvalidConfig(format!("boilerplate phrases: {e}")))
}

fn is_mark(c: char) -> bool {
    matches!(c as u32,
        0x0300..=0x036F | 0x1AB0..=0x1AFF | 0x1DC0..=0x1DFF | 0x20D0..=0x20FF | 0xFE20..=0xFE2F)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || is_mark(c)
}

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '\u{2019}' | '\u{2010}' | '\u{2011}')
}

/// One preprocessed thread.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub source: String,
    #[serde(with = "timestamp")]
    pub window_hint: DateTime<Utc>,
    pub tokens: Vec<String>,
}

pub fn preprocess(thread: &Thread, config: &PrepConfig) -> Document {
    Document {
        source: thread.source.clone(),
        window_hint: thread.start_at,
        tokens: tokenize(&thread.text, config),
    }
}

/// Runs the full rule pipeline on one piece of text.
pub fn tokenize(text: &str, config: &PrepConfig) -> Vec<String> {
    let text = normalize(text);
    let text = match &config.boilerplate_re {
        Some(re) => re.replace_all(&text, " ").into_owned(),
        None => text,
    };

    let rules = &config.strip;
    let mut cleaned = String::with_capacity(text.len());
    for chunk in text.split_whitespace() {
        let Some(chunk) = strip_chunk(chunk, rules) else {
            continue;
        };
        cleaned.push_str(&remove_punctuation(chunk, rules));
        cleaned.push(' ');
    }

    let words: Vec<&str> = cleaned.split_whitespace().collect();
    let words = merge_compounds(&words, config, Pass::Surface);
    let words: Vec<String> = words
        .into_iter()
        .filter(|w| !config.is_stopword(w))
        .collect();
    let refs: Vec<&str> = words.iter().map(String::as_str).collect();
    merge_compounds(&refs, config, Pass::Key)
        .into_iter()
        .map(|w| w.to_uppercase())
        .collect()
}

/// Applies the URL / mention / hashtag / RT rules to a whitespace chunk.
fn strip_chunk<'a>(chunk: &'a str, rules: &StripRules) -> Option<&'a str> {
    let core = chunk.trim_start_matches(|c: char| !is_word_char(c) && c != '@' && c != '#');
    let lower = core.to_lowercase();
    if rules.urls
        && (lower.starts_with("http://")
            || lower.starts_with("https://")
            || lower.starts_with("www.")
            || lower.contains("://"))
    {
        return None;
    }
    if rules.mentions && core.starts_with('@') {
        return None;
    }
    if rules.hashtags && core.starts_with('#') {
        return if rules.keep_hashtag_bodies {
            Some(core.trim_start_matches('#'))
        } else {
            None
        };
    }
    if rules.retweets && lower.trim_end_matches(':') == "rt" {
        return None;
    }
    Some(chunk)
}

/// Replaces punctuation and symbols with spaces. Hyphens and apostrophes
/// between two word characters stay (`covid-19`, `d'água`).
fn remove_punctuation(chunk: &str, rules: &StripRules) -> String {
    let chars: Vec<char> = chunk.chars().collect();
    let mut out = String::with_capacity(chunk.len());
    for (i, &c) in chars.iter().enumerate() {
        let keep = if rules.digits && c.is_numeric() {
            false
        } else if !rules.punctuation || is_word_char(c) {
            true
        } else if is_joiner(c) {
            let before =
                i > 0 && is_word_char(chars[i - 1]) && !(rules.digits && chars[i - 1].is_numeric());
            let after = chars
                .get(i + 1)
                .is_some_and(|&n| is_word_char(n) && !(rules.digits && n.is_numeric()));
            before && after
        } else {
            false
        };
        out.push(if keep { c } else { ' ' });
    }
    out
}

#[derive(Clone, Copy)]
enum Pass {
    /// Full entries containing a stopword, before stopword removal.
    Surface,
    /// Stopword-free keys, after stopword removal.
    Key,
}

/// Greedy leftmost-longest compound joining. Merged words are emitted in
/// lowercase `a_b_c` form; uppercasing happens later.
fn merge_compounds(words: &[&str], config: &PrepConfig, pass: Pass) -> Vec<String> {
    let mut index: HashMap<&str, Vec<(&[String], &Compound)>> = HashMap::new();
    for compound in &config.compounds {
        let pattern: &[String] = match pass {
            Pass::Surface if compound.key.len() < compound.words.len() => &compound.words,
            Pass::Surface => continue,
            Pass::Key if compound.key.len() >= 2 => &compound.key,
            Pass::Key => continue,
        };
        index
            .entry(pattern[0].as_str())
            .or_default()
            .push((pattern, compound));
    }
    for candidates in index.values_mut() {
        candidates.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(b.0)));
    }

    let lowered: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let mut out = Vec::with_capacity(words.len());
    let mut i = 0;
    while i < words.len() {
        let matched = index.get(lowered[i].as_str()).and_then(|candidates| {
            candidates.iter().find(|(pattern, _)| {
                i + pattern.len() <= words.len()
                    && pattern.iter().zip(&lowered[i..]).all(|(p, w)| p == w)
            })
        });
        match matched {
            Some((pattern, compound)) => {
                out.push(compound.words.join("_"));
                i += pattern.len();
            }
            None => {
                out.push(words[i].to_string());
                i += 1;
            }
        }
    }
    out
}

pub fn write_documents(docs: &[Document], path: &Path) -> Result<()> {
    crate::io::write_jsonl(path, docs)
}

pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    crate::io::read_jsonl(path)
}
