//! Source records from the two platforms and the labeled corpus built from them.
//!
//! Tweets arrive as CSV rows. Ads arrive as one plain-text file per ad, laid out
//! as labeled sections:
//!
//! ```text
//! Ad ID 1234
//! Ad Text Join us this Saturday ?????? for the march
//! Ad Landing Page https://www.facebook.com/Black-Matters-1579004149012345/
//! Ad Targeting Location: United States
//!   Interests: ...
//! Ad Impressions 1,024
//! Ad Clicks 57
//! Ad Spend 120.00 RUB
//! Ad Creation Date 06/15/16 04:55:21 AM PDT
//! ```
//!
//! A label may be followed by `:`. Lines that start no section continue the
//! previous one. The targeting section is skipped entirely.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveDateTime, TimeZone, Utc};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("ad record has no `{0}` section")]
    MissingSection(&'static str),
    #[error("cannot parse {field} value `{value}`")]
    UnparseableMetric { field: &'static str, value: String },
    #[error("no usable records")]
    EmptyInput,
    #[error("account `{account}` carries conflicting labels {first} and {second}")]
    ConflictingLabels {
        account: String,
        first: AccountCategory,
        second: AccountCategory,
    },
    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),
    #[error("unknown account category `{0}`")]
    UnknownCategory(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The eight account categories of the Twitter data, in declaration order.
/// That order breaks every exact tie in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AccountCategory {
    Commercial,
    Fearmonger,
    HashtagGamer,
    LeftTroll,
    NewsFeed,
    NonEnglish,
    RightTroll,
    Unknown,
}

impl AccountCategory {
    pub const ALL: [AccountCategory; 8] = [
        AccountCategory::Commercial,
        AccountCategory::Fearmonger,
        AccountCategory::HashtagGamer,
        AccountCategory::LeftTroll,
        AccountCategory::NewsFeed,
        AccountCategory::NonEnglish,
        AccountCategory::RightTroll,
        AccountCategory::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AccountCategory::Commercial => "Commercial",
            AccountCategory::Fearmonger => "Fearmonger",
            AccountCategory::HashtagGamer => "HashtagGamer",
            AccountCategory::LeftTroll => "LeftTroll",
            AccountCategory::NewsFeed => "NewsFeed",
            AccountCategory::NonEnglish => "NonEnglish",
            AccountCategory::RightTroll => "RightTroll",
            AccountCategory::Unknown => "Unknown",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for AccountCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AccountCategory {
    type Err = CorpusError;

    /// Accepts the canonical names and their spaced or hyphenated spellings
    /// ("Right Troll", "Non-English"), case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '-' | '_'))
            .flat_map(char::to_lowercase)
            .collect();
        AccountCategory::ALL
            .into_iter()
            .find(|c| c.as_str().to_lowercase() == key)
            .ok_or_else(|| CorpusError::UnknownCategory(s.to_string()))
    }
}

const CANONICAL_TS: &str = "%Y-%m-%d %H:%M:%S";

/// Parse the timestamp layouts seen in the source data. Naive times are UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    const LAYOUTS: [&str; 5] = [
        CANONICAL_TS,
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M",
        "%m/%d/%Y %H:%M",
        "%m/%d/%Y %H:%M:%S",
    ];
    for layout in LAYOUTS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, layout) {
            return Some(Utc.from_utc_datetime(&dt));
        }
    }
    for layout in ["%Y-%m-%d", "%m/%d/%Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(s, layout) {
            return Some(Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0)?));
        }
    }
    None
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.format(CANONICAL_TS).to_string()
}

// ---------------------------------------------------------------------------
// Tweets
// ---------------------------------------------------------------------------

/// Column names of a tweet CSV. Defaults follow the public troll-tweet release.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TweetSchema {
    pub handle: String,
    pub content: String,
    pub publish_date: String,
    pub category: String,
    /// Optional column; missing means 0 followers.
    pub followers: String,
    /// Optional column; missing means not a retweet.
    pub is_retweet: String,
}

impl Default for TweetSchema {
    fn default() -> Self {
        Self {
            handle: "author".into(),
            content: "content".into(),
            publish_date: "publish_date".into(),
            category: "account_category".into(),
            followers: "followers".into(),
            is_retweet: "retweet".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TweetRecord {
    pub handle: String,
    pub content: String,
    pub publish_ts: DateTime<Utc>,
    pub followers: u64,
    pub is_retweet: bool,
    pub category: AccountCategory,
}

struct TweetColumns {
    handle: usize,
    content: usize,
    publish_date: usize,
    category: usize,
    followers: Option<usize>,
    is_retweet: Option<usize>,
}

/// Streaming tweet reader: one row in memory at a time.
pub struct TweetReader<R: Read> {
    rdr: csv::Reader<R>,
    cols: TweetColumns,
    row: csv::StringRecord,
}

impl<R: Read> TweetReader<R> {
    pub fn new(reader: R, schema: &TweetSchema) -> Result<Self, CorpusError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let require = |name: &str| find(name).ok_or_else(|| CorpusError::MissingColumn(name.to_string()));
        let cols = TweetColumns {
            handle: require(&schema.handle)?,
            content: require(&schema.content)?,
            publish_date: require(&schema.publish_date)?,
            category: require(&schema.category)?,
            followers: find(&schema.followers),
            is_retweet: find(&schema.is_retweet),
        };
        Ok(Self { rdr, cols, row: csv::StringRecord::new() })
    }

    fn convert(&self) -> Result<TweetRecord, String> {
        let field = |i: usize| self.row.get(i).ok_or_else(|| format!("missing field {}", i + 1));
        let handle = field(self.cols.handle)?.trim();
        if handle.is_empty() {
            return Err("empty handle".into());
        }
        let content = field(self.cols.content)?;
        if content.trim().is_empty() {
            return Err("empty content".into());
        }
        let raw_ts = field(self.cols.publish_date)?;
        let publish_ts =
            parse_timestamp(raw_ts).ok_or_else(|| format!("unparseable publish date `{raw_ts}`"))?;
        let category: AccountCategory = field(self.cols.category)?
            .trim()
            .parse()
            .map_err(|e: CorpusError| e.to_string())?;
        let followers = match self.cols.followers.and_then(|i| self.row.get(i)) {
            None => 0,
            Some(s) if s.trim().is_empty() => 0,
            Some(s) => s.trim().parse().map_err(|_| format!("bad follower count `{s}`"))?,
        };
        let is_retweet = match self.cols.is_retweet.and_then(|i| self.row.get(i)) {
            None => false,
            Some(s) => match s.trim().to_ascii_lowercase().as_str() {
                "" | "0" | "false" => false,
                "1" | "true" => true,
                other => return Err(format!("bad retweet flag `{other}`")),
            },
        };
        Ok(TweetRecord {
            handle: handle.to_string(),
            content: content.to_string(),
            publish_ts,
            followers,
            is_retweet,
            category,
        })
    }
}

impl<R: Read> Iterator for TweetReader<R> {
    type Item = Result<TweetRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut row = std::mem::take(&mut self.row);
        let res = self.rdr.read_record(&mut row);
        self.row = row;
        match res {
            Ok(false) => None,
            Ok(true) => {
                let line = self.row.position().map_or(0, |p| p.line());
                Some(self.convert().map_err(|reason| CorpusError::MalformedRow { line, reason }))
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                Some(Err(CorpusError::MalformedRow { line, reason: e.to_string() }))
            }
        }
    }
}

#[derive(Debug, Default)]
pub struct TweetParse {
    pub records: Vec<TweetRecord>,
    /// `(line, reason)` for every skipped row.
    pub rejected: Vec<(u64, String)>,
}

/// Read a whole tweet CSV. In strict mode the first malformed row is fatal;
/// otherwise malformed rows are skipped and reported.
pub fn parse_tweet_csv<R: Read>(
    reader: R,
    schema: &TweetSchema,
    strict: bool,
) -> Result<TweetParse, CorpusError> {
    let mut out = TweetParse::default();
    for item in TweetReader::new(reader, schema)? {
        match item {
            Ok(rec) => out.records.push(rec),
            Err(CorpusError::MalformedRow { line, reason }) if !strict => out.rejected.push((line, reason)),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Write tweets back out in the canonical layout under `schema`'s column names.
pub fn write_tweet_csv<W: Write>(
    writer: W,
    schema: &TweetSchema,
    records: &[TweetRecord],
) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        &schema.handle,
        &schema.content,
        &schema.publish_date,
        &schema.followers,
        &schema.is_retweet,
        &schema.category,
    ])?;
    for r in records {
        w.write_record([
            r.handle.as_str(),
            r.content.as_str(),
            &format_timestamp(&r.publish_ts),
            &r.followers.to_string(),
            if r.is_retweet { "1" } else { "0" },
            r.category.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Ads
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AdAccount {
    Named(String),
    /// The landing page is off-platform, or no name could be recovered.
    Unknown,
    /// The landing page points at an event.
    Event,
}

impl AdAccount {
    pub fn name(&self) -> Option<&str> {
        match self {
            AdAccount::Named(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for AdAccount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdAccount::Named(n) => f.write_str(n),
            AdAccount::Unknown => f.write_str("<unknown>"),
            AdAccount::Event => f.write_str("<event>"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Redaction {
    None,
    Partial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdRecord {
    pub ad_id: String,
    pub text: String,
    pub landing_page: String,
    pub account: AdAccount,
    pub clicks: Option<u64>,
    pub impressions: Option<u64>,
    pub creation_ts: Option<DateTime<Utc>>,
    pub redaction: Redaction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropReason {
    FullyRedacted,
    EmptyText,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AdOutcome {
    Kept(AdRecord),
    Dropped { ad_id: String, reason: DropReason },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Id,
    Text,
    LandingPage,
    Targeting,
    Impressions,
    Clicks,
    Spend,
    CreationDate,
    EndDate,
}

const SECTION_LABELS: [(&str, Section); 9] = [
    ("ad landing page", Section::LandingPage),
    ("ad creation date", Section::CreationDate),
    ("ad impressions", Section::Impressions),
    ("ad targeting", Section::Targeting),
    ("ad end date", Section::EndDate),
    ("ad clicks", Section::Clicks),
    ("ad spend", Section::Spend),
    ("ad text", Section::Text),
    ("ad id", Section::Id),
];

/// Split a line into `(section, rest)` if it opens a section.
fn section_start(line: &str) -> Option<(Section, &str)> {
    let trimmed = line.trim_start();
    for (label, section) in SECTION_LABELS {
        let Some(head) = trimmed.get(..label.len()) else { continue };
        if !head.eq_ignore_ascii_case(label) {
            continue;
        }
        let rest = &trimmed[label.len()..];
        match rest.chars().next() {
            None => return Some((section, "")),
            Some(c) if c == ':' || c.is_whitespace() => {
                let rest = rest.strip_prefix(':').unwrap_or(rest);
                return Some((section, rest.trim()));
            }
            Some(_) => continue,
        }
    }
    None
}

/// Remove runs of two or more `?` (the redaction mask) and collapse whitespace.
/// A lone `?` is ordinary punctuation and stays.
pub fn strip_redactions(text: &str) -> (String, bool) {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut removed = false;
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '?' {
            let start = i;
            while i < chars.len() && chars[i] == '?' {
                i += 1;
            }
            if i - start >= 2 {
                removed = true;
                out.push(' ');
            } else {
                out.push('?');
            }
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    (out.split_whitespace().collect::<Vec<_>>().join(" "), removed)
}

/// True when nothing but `?`, whitespace and punctuation is left.
pub fn is_fully_redacted(text: &str) -> bool {
    !text.chars().any(char::is_alphanumeric)
}

const PLATFORM_HOSTS: [&str; 3] = ["facebook.com", "fb.com", "fb.me"];
const GENERIC_SEGMENTS: [&str; 5] = ["pages", "pg", "groups", "people", "profile.php"];

/// Recover the posting account from an ad's landing page.
///
/// On-platform links yield the last meaningful path segment with any trailing
/// numeric id removed and `-`/`_` turned into spaces. Event links yield
/// [`AdAccount::Event`], everything else [`AdAccount::Unknown`].
pub fn account_from_landing_page(url: &str) -> AdAccount {
    let url = url.trim();
    let lower = url.to_ascii_lowercase();
    let rest = ["https://", "http://"]
        .iter()
        .find_map(|p| lower.starts_with(p).then(|| &url[p.len()..]))
        .unwrap_or(url);
    let (host, path) = rest.split_once('/').unwrap_or((rest, ""));
    let mut host = host.to_ascii_lowercase();
    for prefix in ["www.", "m.", "web.", "business."] {
        if let Some(h) = host.strip_prefix(prefix) {
            host = h.to_string();
        }
    }
    if !PLATFORM_HOSTS.contains(&host.as_str()) {
        return AdAccount::Unknown;
    }
    let path = path.split(['?', '#']).next().unwrap_or("");
    let segments: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
    if segments.iter().any(|s| s.eq_ignore_ascii_case("events")) {
        return AdAccount::Event;
    }
    for seg in segments.iter().rev() {
        if GENERIC_SEGMENTS.iter().any(|g| seg.eq_ignore_ascii_case(g)) {
            continue;
        }
        let base = strip_numeric_suffix(seg);
        let name = base
            .replace(['-', '_'], " ")
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        if !name.is_empty() {
            return AdAccount::Named(name);
        }
    }
    AdAccount::Unknown
}

fn strip_numeric_suffix(seg: &str) -> &str {
    if seg.chars().all(|c| c.is_ascii_digit()) {
        return "";
    }
    if let Some(pos) = seg.rfind(['-', '_']) {
        let tail = &seg[pos + 1..];
        if !tail.is_empty() && tail.chars().all(|c| c.is_ascii_digit()) {
            return &seg[..pos];
        }
    }
    seg
}

fn parse_metric(field: &'static str, value: &str) -> Result<Option<u64>, CorpusError> {
    let v = value.trim();
    if v.is_empty() || v.eq_ignore_ascii_case("none") || v.eq_ignore_ascii_case("n/a") {
        return Ok(None);
    }
    let digits: String = v.chars().filter(|&c| c != ',').collect();
    digits
        .parse()
        .map(Some)
        .map_err(|_| CorpusError::UnparseableMetric { field, value: v.to_string() })
}

/// Creation dates look like `06/15/16 04:55:21 AM PDT`; ISO forms are accepted too.
fn parse_ad_date(value: &str) -> Result<Option<DateTime<Utc>>, CorpusError> {
    let v = value.trim();
    if v.is_empty() {
        return Ok(None);
    }
    if let Some(ts) = parse_timestamp(v) {
        return Ok(Some(ts));
    }
    let (body, offset_hours) = match v.rsplit_once(' ') {
        Some((body, tz)) => match tz.to_ascii_uppercase().as_str() {
            "UTC" | "GMT" => (body, 0),
            "EDT" => (body, -4),
            "EST" | "CDT" => (body, -5),
            "CST" | "MDT" => (body, -6),
            "MST" | "PDT" => (body, -7),
            "PST" => (body, -8),
            _ => (v, 0),
        },
        None => (v, 0),
    };
    for layout in ["%m/%d/%y %I:%M:%S %p", "%m/%d/%Y %I:%M:%S %p", "%m/%d/%y %H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(body, layout) {
            let utc = dt - Duration::hours(offset_hours);
            return Ok(Some(Utc.from_utc_datetime(&utc)));
        }
    }
    Err(CorpusError::UnparseableMetric { field: "Ad Creation Date", value: v.to_string() })
}

/// Parse the text layer of one ad document.
pub fn parse_ad_record(block: &str) -> Result<AdOutcome, CorpusError> {
    let mut sections: HashMap<u8, Vec<String>> = HashMap::new();
    let key = |s: Section| s as u8;
    let mut current: Option<Section> = None;
    for line in block.lines() {
        if let Some((section, rest)) = section_start(line) {
            current = Some(section);
            let entry = sections.entry(key(section)).or_default();
            if !rest.is_empty() {
                entry.push(rest.to_string());
            }
        } else if let Some(section) = current {
            let t = line.trim();
            if !t.is_empty() && section != Section::Targeting {
                sections.entry(key(section)).or_default().push(t.to_string());
            }
        }
    }
    let joined = |s: Section| sections.get(&key(s)).map(|v| v.join(" "));

    let ad_id = joined(Section::Id)
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .ok_or(CorpusError::MissingSection("Ad ID"))?;
    let raw_text = joined(Section::Text).ok_or(CorpusError::MissingSection("Ad Text"))?;
    let landing_page = joined(Section::LandingPage).unwrap_or_default().trim().to_string();
    let impressions = parse_metric("Ad Impressions", &joined(Section::Impressions).unwrap_or_default())?;
    let clicks = parse_metric("Ad Clicks", &joined(Section::Clicks).unwrap_or_default())?;
    let creation_ts = parse_ad_date(&joined(Section::CreationDate).unwrap_or_default())?;

    if raw_text.trim().is_empty() {
        return Ok(AdOutcome::Dropped { ad_id, reason: DropReason::EmptyText });
    }
    if is_fully_redacted(&raw_text) {
        return Ok(AdOutcome::Dropped { ad_id, reason: DropReason::FullyRedacted });
    }
    let (text, removed) = strip_redactions(&raw_text);
    let account = account_from_landing_page(&landing_page);
    Ok(AdOutcome::Kept(AdRecord {
        ad_id,
        text,
        landing_page,
        account,
        clicks,
        impressions,
        creation_ts,
        redaction: if removed { Redaction::Partial } else { Redaction::None },
    }))
}

// ---------------------------------------------------------------------------
// Weekly counts
// ---------------------------------------------------------------------------

pub trait Timestamped {
    fn timestamp(&self) -> Option<DateTime<Utc>>;
}

impl Timestamped for TweetRecord {
    fn timestamp(&self) -> Option<DateTime<Utc>> {
        Some(self.publish_ts)
    }
}

impl Timestamped for AdRecord {
    fn timestamp(&self) -> Option<DateTime<Utc>> {
        self.creation_ts
    }
}

impl Timestamped for Document {
    fn timestamp(&self) -> Option<DateTime<Utc>> {
        self.timestamp
    }
}

/// Monday of the ISO week containing `date`.
pub fn week_start(date: NaiveDate) -> NaiveDate {
    date - Duration::days(i64::from(date.weekday().num_days_from_monday()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeeklySeries {
    pub weeks: Vec<(NaiveDate, u64)>,
    /// Records without a timestamp.
    pub untimestamped: usize,
    /// Timestamped records outside the requested range.
    pub out_of_range: usize,
}

impl WeeklySeries {
    pub fn total(&self) -> u64 {
        self.weeks.iter().map(|w| w.1).sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), CorpusError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["week_start", "count"])?;
        for (week, count) in &self.weeks {
            w.write_record([week.format("%Y-%m-%d").to_string(), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Count records per ISO week, zero-filling gaps.
///
/// Without a range the series runs from the first to the last record's week;
/// with one it covers every week the range touches.
pub fn weekly_counts<T: Timestamped>(
    records: &[T],
    range: Option<(DateTime<Utc>, DateTime<Utc>)>,
) -> Result<WeeklySeries, CorpusError> {
    let mut counts: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    let mut untimestamped = 0;
    let mut out_of_range = 0;
    for r in records {
        match r.timestamp() {
            None => untimestamped += 1,
            Some(ts) => {
                if let Some((lo, hi)) = range {
                    if ts < lo || ts > hi {
                        out_of_range += 1;
                        continue;
                    }
                }
                *counts.entry(week_start(ts.date_naive())).or_default() += 1;
            }
        }
    }
    if untimestamped == records.len() {
        return Err(CorpusError::EmptyInput);
    }
    let (first, last) = match range {
        Some((lo, hi)) => (week_start(lo.date_naive()), week_start(hi.date_naive())),
        None => (*counts.keys().next().unwrap(), *counts.keys().next_back().unwrap()),
    };
    let mut weeks = Vec::new();
    let mut week = first;
    while week <= last {
        weeks.push((week, counts.get(&week).copied().unwrap_or(0)));
        week += Duration::weeks(1);
    }
    Ok(WeeklySeries { weeks, untimestamped, out_of_range })
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Twitter,
    Facebook,
    Synthetic,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Twitter => "twitter",
            Source::Facebook => "facebook",
            Source::Synthetic => "synthetic",
        }
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "twitter" => Ok(Source::Twitter),
            "facebook" => Ok(Source::Facebook),
            "synthetic" => Ok(Source::Synthetic),
            other => Err(format!("unknown source `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub label: Option<AccountCategory>,
    pub source: Source,
    pub account: Option<String>,
    pub timestamp: Option<DateTime<Utc>>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>, label: Option<AccountCategory>, source: Source) -> Self {
        Self {
            doc_id: doc_id.into(),
            text: text.into(),
            label,
            source,
            account: None,
            timestamp: None,
        }
    }
}

/// An ordered collection of documents with unique ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(documents.len());
        for d in &documents {
            if !seen.insert(d.doc_id.as_str()) {
                return Err(CorpusError::DuplicateDocId(d.doc_id.clone()));
            }
        }
        Ok(Self { documents })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.documents.iter()
    }

    pub fn is_labeled(&self) -> bool {
        self.documents.iter().any(|d| d.label.is_some())
    }

    /// Documents at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus { documents: indices.iter().map(|&i| self.documents[i].clone()).collect() }
    }

    pub fn filter<F: Fn(&Document) -> bool>(&self, keep: F) -> Corpus {
        Corpus { documents: self.documents.iter().filter(|d| keep(d)).cloned().collect() }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), CorpusError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["doc_id", "source", "account", "label", "timestamp", "text"])?;
        for d in &self.documents {
            w.write_record([
                d.doc_id.as_str(),
                d.source.as_str(),
                d.account.as_deref().unwrap_or(""),
                d.label.map_or("", AccountCategory::as_str),
                &d.timestamp.as_ref().map(format_timestamp).unwrap_or_default(),
                d.text.as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Corpus, CorpusError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
        };
        let (id_c, src_c, acct_c, label_c, ts_c, text_c) =
            (col("doc_id")?, col("source")?, col("account")?, col("label")?, col("timestamp")?, col("text")?);
        let mut docs = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let bad = |reason: String| CorpusError::MalformedRow { line, reason };
            let get = |i: usize| row.get(i).unwrap_or("");
            let label = match get(label_c).trim() {
                "" => None,
                s => Some(s.parse().map_err(|e: CorpusError| bad(e.to_string()))?),
            };
            let timestamp = match get(ts_c).trim() {
                "" => None,
                s => Some(parse_timestamp(s).ok_or_else(|| bad(format!("bad timestamp `{s}`")))?),
            };
            let account = Some(get(acct_c).to_string()).filter(|a| !a.is_empty());
            docs.push(Document {
                doc_id: get(id_c).to_string(),
                text: get(text_c).to_string(),
                label,
                source: get(src_c).parse().map_err(bad)?,
                account,
                timestamp,
            });
        }
        Corpus::new(docs)
    }
}

/// A record that can become a corpus document.
pub trait CorpusRecord {
    const SOURCE: Source;
    /// Document id when each record is its own document; `position` is the
    /// record's index in the input.
    fn message_id(&self, position: usize) -> String;
    fn text(&self) -> &str;
    /// Grouping key for per-account documents; `None` excludes the record.
    fn account(&self) -> Option<&str>;
    fn label(&self) -> Option<AccountCategory>;
    fn record_timestamp(&self) -> Option<DateTime<Utc>>;
}

impl CorpusRecord for TweetRecord {
    const SOURCE: Source = Source::Twitter;

    fn message_id(&self, position: usize) -> String {
        format!("{}/{}", self.handle, position)
    }
    fn text(&self) -> &str {
        &self.content
    }
    fn account(&self) -> Option<&str> {
        Some(&self.handle)
    }
    fn label(&self) -> Option<AccountCategory> {
        Some(self.category)
    }
    fn record_timestamp(&self) -> Option<DateTime<Utc>> {
        Some(self.publish_ts)
    }
}

impl CorpusRecord for AdRecord {
    const SOURCE: Source = Source::Facebook;

    fn message_id(&self, _position: usize) -> String {
        self.ad_id.clone()
    }
    fn text(&self) -> &str {
        &self.text
    }
    fn account(&self) -> Option<&str> {
        self.account.name()
    }
    fn label(&self) -> Option<AccountCategory> {
        None
    }
    fn record_timestamp(&self) -> Option<DateTime<Utc>> {
        self.creation_ts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grouping {
    PerMessage,
    PerAccount,
}

impl FromStr for Grouping {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "message" | "per-message" => Ok(Grouping::PerMessage),
            "account" | "per-account" => Ok(Grouping::PerAccount),
            other => Err(format!("unknown grouping `{other}` (expected message or account)")),
        }
    }
}

/// Turn records into a corpus, one document per record or per account.
///
/// Per-account documents concatenate texts in input order and are ordered by
/// first appearance. Ads whose account is [`AdAccount::Unknown`] or
/// [`AdAccount::Event`] belong to no account and are left out of per-account
/// grouping.
pub fn to_corpus<T: CorpusRecord>(records: &[T], grouping: Grouping) -> Result<Corpus, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    match grouping {
        Grouping::PerMessage => {
            let docs = records
                .iter()
                .enumerate()
                .map(|(i, r)| Document {
                    doc_id: r.message_id(i),
                    text: r.text().to_string(),
                    label: r.label(),
                    source: T::SOURCE,
                    account: r.account().map(str::to_string),
                    timestamp: r.record_timestamp(),
                })
                .collect();
            Corpus::new(docs)
        }
        Grouping::PerAccount => {
            let mut order: Vec<&str> = Vec::new();
            let mut groups: HashMap<&str, (Vec<&str>, Option<AccountCategory>)> = HashMap::new();
            for r in records {
                let Some(account) = r.account() else { continue };
                let entry = groups.entry(account).or_insert_with(|| {
                    order.push(account);
                    (Vec::new(), r.label())
                });
                if let (Some(first), Some(second)) = (entry.1, r.label()) {
                    if first != second {
                        return Err(CorpusError::ConflictingLabels {
                            account: account.to_string(),
                            first,
                            second,
                        });
                    }
                }
                entry.0.push(r.text());
            }
            let docs = order
                .into_iter()
                .map(|account| {
                    let (texts, label) = &groups[account];
                    Document {
                        doc_id: account.to_string(),
                        text: texts.join("\n"),
                        label: *label,
                        source: T::SOURCE,
                        account: Some(account.to_string()),
                        timestamp: None,
                    }
                })
                .collect();
            Corpus::new(docs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "author,content,publish_date,followers,retweet,account_category\n";

    fn tweet(handle: &str, category: AccountCategory, ts: &str) -> TweetRecord {
        TweetRecord {
            handle: handle.into(),
            content: format!("hello from {handle}"),
            publish_ts: parse_timestamp(ts).unwrap(),
            followers: 10,
            is_retweet: false,
            category,
        }
    }

    #[test]
    fn category_parsing() {
        assert_eq!("RightTroll".parse::<AccountCategory>().unwrap(), AccountCategory::RightTroll);
        assert_eq!("Right Troll".parse::<AccountCategory>().unwrap(), AccountCategory::RightTroll);
        assert_eq!("Non-English".parse::<AccountCategory>().unwrap(), AccountCategory::NonEnglish);
        assert!("Centrist".parse::<AccountCategory>().is_err());
        assert_eq!(AccountCategory::ALL.len(), 8);
    }

    #[test]
    fn single_valid_row() {
        let csv = format!("{HEADER}alice,\"Make America great, again\",10/1/2017 19:58,1200,0,RightTroll\n");
        let out = parse_tweet_csv(csv.as_bytes(), &TweetSchema::default(), true).unwrap();
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        assert_eq!(r.category, AccountCategory::RightTroll);
        assert_eq!(r.content, "Make America great, again");
        assert_eq!(r.followers, 1200);
        assert_eq!(format_timestamp(&r.publish_ts), "2017-10-01 19:58:00");
    }

    #[test]
    fn unknown_category_is_malformed() {
        let csv = format!("{HEADER}bob,hi there,2017-01-01 00:00:00,1,0,Centrist\ncarol,ok,2017-01-01 00:00:00,1,0,LeftTroll\n");
        let strict = parse_tweet_csv(csv.as_bytes(), &TweetSchema::default(), true);
        assert!(matches!(strict, Err(CorpusError::MalformedRow { line: 2, .. })));
        let lenient = parse_tweet_csv(csv.as_bytes(), &TweetSchema::default(), false).unwrap();
        assert_eq!(lenient.records.len(), 1);
        assert_eq!(lenient.rejected.len(), 1);
        assert_eq!(lenient.rejected[0].0, 2);
    }

    #[test]
    fn missing_column() {
        let csv = "author,content,publish_date\nx,y,2017-01-01\n";
        let err = parse_tweet_csv(csv.as_bytes(), &TweetSchema::default(), true).unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn(c) if c == "account_category"));
    }

    #[test]
    fn empty_content_and_bad_date_rejected() {
        let csv = format!("{HEADER}a,   ,2017-01-01,1,0,LeftTroll\nb,text,yesterday,1,0,LeftTroll\n");
        let out = parse_tweet_csv(csv.as_bytes(), &TweetSchema::default(), false).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.rejected.len(), 2);
    }

    #[test]
    fn reader_streams_rows() {
        let mut csv = HEADER.to_string();
        for i in 0..1000 {
            csv.push_str(&format!("h{},tweet {},2016-03-0{} 10:00:00,{},1,NewsFeed\n", i % 7, i, 1 + i % 9, i));
        }
        let reader = TweetReader::new(csv.as_bytes(), &TweetSchema::default()).unwrap();
        let mut n = 0;
        for r in reader {
            let r = r.unwrap();
            assert!(r.is_retweet);
            n += 1;
        }
        assert_eq!(n, 1000);
    }

    fn arb_tweet() -> impl Strategy<Value = TweetRecord> {
        (
            "[a-z][a-z0-9_]{0,10}",
            "[ -~]{0,30}[a-zA-Z][ -~\n]{0,30}",
            0i64..2_000_000_000,
            any::<u32>(),
            any::<bool>(),
            0usize..8,
        )
            .prop_map(|(handle, content, secs, followers, rt, cat)| TweetRecord {
                handle,
                content,
                publish_ts: Utc.timestamp_opt(secs, 0).unwrap(),
                followers: u64::from(followers),
                is_retweet: rt,
                category: AccountCategory::ALL[cat],
            })
    }

    proptest! {
        #[test]
        fn tweet_csv_round_trip(records in prop::collection::vec(arb_tweet(), 1..20)) {
            let schema = TweetSchema::default();
            let mut first = Vec::new();
            write_tweet_csv(&mut first, &schema, &records).unwrap();
            let parsed = parse_tweet_csv(first.as_slice(), &schema, true).unwrap();
            prop_assert_eq!(&parsed.records, &records);
            let mut second = Vec::new();
            write_tweet_csv(&mut second, &schema, &parsed.records).unwrap();
            prop_assert_eq!(first, second);
        }
    }

    fn ad(text: &str, landing: &str) -> String {
        format!(
            "Ad ID 4021\nAd Text {text}\nAd Landing Page {landing}\nAd Targeting Location: United States\n  Interests: Martin Luther King\nAd Impressions 1,024\nAd Clicks 57\nAd Spend 120.00 RUB\nAd Creation Date 06/15/16 04:55:21 AM PDT\n"
        )
    }

    #[test]
    fn fully_redacted_ad_dropped() {
        let out = parse_ad_record(&ad("?????? ??????", "https://www.facebook.com/x")).unwrap();
        assert_eq!(out, AdOutcome::Dropped { ad_id: "4021".into(), reason: DropReason::FullyRedacted });
        let out = parse_ad_record(&ad("???? !!! ...", "https://www.facebook.com/x")).unwrap();
        assert!(matches!(out, AdOutcome::Dropped { .. }));
    }

    #[test]
    fn partial_redaction_removes_runs() {
        let out = parse_ad_record(&ad("Join ?????? at the rally? Bring ???? friends", "https://www.facebook.com/x")).unwrap();
        let AdOutcome::Kept(rec) = out else { panic!("dropped") };
        assert_eq!(rec.text, "Join at the rally? Bring friends");
        assert_eq!(rec.redaction, Redaction::Partial);
        assert_eq!(rec.impressions, Some(1024));
        assert_eq!(rec.clicks, Some(57));
        assert_eq!(format_timestamp(&rec.creation_ts.unwrap()), "2016-06-15 11:55:21");
    }

    #[test]
    fn multi_line_text_and_targeting_ignored() {
        let block = "Ad ID: 7\nAd Text: first line\nsecond line\nAd Targeting: Age: 18-65+\nPeople who match: Interests: Police\nAd Clicks: None\n";
        let AdOutcome::Kept(rec) = parse_ad_record(block).unwrap() else { panic!() };
        assert_eq!(rec.text, "first line second line");
        assert_eq!(rec.clicks, None);
        assert_eq!(rec.impressions, None);
        assert_eq!(rec.account, AdAccount::Unknown);
        assert_eq!(rec.redaction, Redaction::None);
    }

    #[test]
    fn ad_errors() {
        assert!(matches!(parse_ad_record("Ad Text hello\n"), Err(CorpusError::MissingSection("Ad ID"))));
        assert!(matches!(parse_ad_record("Ad ID 3\n"), Err(CorpusError::MissingSection("Ad Text"))));
        let bad = "Ad ID 3\nAd Text hi there\nAd Clicks lots\n";
        assert!(matches!(parse_ad_record(bad), Err(CorpusError::UnparseableMetric { field: "Ad Clicks", .. })));
    }

    #[test]
    fn landing_page_accounts() {
        assert_eq!(
            account_from_landing_page("https://www.facebook.com/Black-Matters-1579004149012345/"),
            AdAccount::Named("Black Matters".into())
        );
        assert_eq!(
            account_from_landing_page("https://www.facebook.com/Black-Matters"),
            AdAccount::Named("Black Matters".into())
        );
        assert_eq!(
            account_from_landing_page("http://facebook.com/pages/Being_Patriotic/123456?ref=ts"),
            AdAccount::Named("Being Patriotic".into())
        );
        assert_eq!(account_from_landing_page("https://www.facebook.com/events/1234567/"), AdAccount::Event);
        assert_eq!(account_from_landing_page("https://blackmattersus.com/donate"), AdAccount::Unknown);
        assert_eq!(account_from_landing_page(""), AdAccount::Unknown);
        assert_eq!(account_from_landing_page("https://www.facebook.com/"), AdAccount::Unknown);
    }

    proptest! {
        #[test]
        fn kept_ads_have_no_redaction_runs(text in "[a-z?! ]{1,40}") {
            let block = format!("Ad ID 1\nAd Text {text}\n");
            if let AdOutcome::Kept(rec) = parse_ad_record(&block).unwrap() {
                prop_assert!(!rec.text.contains("??"));
                prop_assert!(rec.text.chars().any(|c| c.is_alphanumeric()));
            }
        }
    }

    #[test]
    fn weekly_single_and_gap() {
        let one = [tweet("a", AccountCategory::LeftTroll, "2016-05-04 10:00:00")];
        let s = weekly_counts(&one, None).unwrap();
        assert_eq!(s.weeks, vec![(NaiveDate::from_ymd_opt(2016, 5, 2).unwrap(), 1)]);

        let two = [
            tweet("a", AccountCategory::LeftTroll, "2016-05-04 10:00:00"),
            tweet("b", AccountCategory::LeftTroll, "2016-05-25 10:00:00"),
        ];
        let s = weekly_counts(&two, None).unwrap();
        let counts: Vec<u64> = s.weeks.iter().map(|w| w.1).collect();
        assert_eq!(counts, vec![1, 0, 0, 1]);
    }

    #[test]
    fn weekly_spanning_range_and_errors() {
        let mk = |ts: Option<&str>| AdRecord {
            ad_id: "x".into(),
            text: "t".into(),
            landing_page: String::new(),
            account: AdAccount::Unknown,
            clicks: None,
            impressions: None,
            creation_ts: ts.and_then(parse_timestamp),
            redaction: Redaction::None,
        };
        let ads = vec![mk(Some("2015-03-10")), mk(Some("2017-11-20")), mk(None)];
        let s = weekly_counts(&ads, None).unwrap();
        assert_eq!(s.weeks.first().unwrap().0, NaiveDate::from_ymd_opt(2015, 3, 9).unwrap());
        assert_eq!(s.weeks.last().unwrap().0, NaiveDate::from_ymd_opt(2017, 11, 20).unwrap());
        assert_eq!(s.total(), 2);
        assert_eq!(s.untimestamped, 1);

        let range = (parse_timestamp("2015-01-01").unwrap(), parse_timestamp("2015-12-31").unwrap());
        let s = weekly_counts(&ads, Some(range)).unwrap();
        assert_eq!(s.total(), 1);
        assert_eq!(s.out_of_range, 1);

        assert!(matches!(weekly_counts(&[mk(None)], None), Err(CorpusError::EmptyInput)));
    }

    proptest! {
        #[test]
        fn weekly_total_matches(secs in prop::collection::vec(1_400_000_000i64..1_520_000_000, 1..50)) {
            let recs: Vec<TweetRecord> = secs.iter().map(|&s| TweetRecord {
                publish_ts: Utc.timestamp_opt(s, 0).unwrap(),
                ..tweet("a", AccountCategory::NewsFeed, "2016-01-01")
            }).collect();
            let s = weekly_counts(&recs, None).unwrap();
            prop_assert_eq!(s.total() as usize, recs.len());
            for w in s.weeks.windows(2) {
                prop_assert_eq!(w[1].0 - w[0].0, Duration::weeks(1));
            }
        }
    }

    #[test]
    fn per_account_grouping() {
        let tweets = [
            tweet("a", AccountCategory::LeftTroll, "2016-01-01"),
            tweet("a", AccountCategory::LeftTroll, "2016-01-02"),
            tweet("b", AccountCategory::RightTroll, "2016-01-02"),
        ];
        let per_msg = to_corpus(&tweets, Grouping::PerMessage).unwrap();
        assert_eq!(per_msg.len(), 3);
        let per_acct = to_corpus(&tweets, Grouping::PerAccount).unwrap();
        assert_eq!(per_acct.len(), 2);
        assert_eq!(per_acct.documents()[0].label, Some(AccountCategory::LeftTroll));

        let conflict = [
            tweet("a", AccountCategory::LeftTroll, "2016-01-01"),
            tweet("a", AccountCategory::RightTroll, "2016-01-02"),
        ];
        assert!(matches!(
            to_corpus(&conflict, Grouping::PerAccount),
            Err(CorpusError::ConflictingLabels { .. })
        ));
        assert!(matches!(to_corpus::<TweetRecord>(&[], Grouping::PerMessage), Err(CorpusError::EmptyInput)));
    }

    #[test]
    fn facebook_accounts_unlabeled() {
        let ads: Vec<AdRecord> = (0..190)
            .map(|i| AdRecord {
                ad_id: format!("ad{i}"),
                text: format!("text {i}"),
                landing_page: String::new(),
                account: AdAccount::Named(format!("Account {}", i % 95)),
                clicks: None,
                impressions: None,
                creation_ts: None,
                redaction: Redaction::None,
            })
            .collect();
        let c = to_corpus(&ads, Grouping::PerAccount).unwrap();
        assert_eq!(c.len(), 95);
        assert!(c.iter().all(|d| d.label.is_none()));
    }

    #[test]
    fn corpus_csv_round_trip() {
        let tweets = [
            tweet("a", AccountCategory::LeftTroll, "2016-01-01 03:04:05"),
            tweet("b", AccountCategory::Fearmonger, "2016-01-02"),
        ];
        let c = to_corpus(&tweets, Grouping::PerMessage).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = Corpus::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let d = Document::new("x", "t", None, Source::Synthetic);
        assert!(matches!(Corpus::new(vec![d.clone(), d]), Err(CorpusError::DuplicateDocId(_))));
    }
}
