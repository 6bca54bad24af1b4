//! `ingest-tweets`, `ingest-ads` and `report`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use trollkit::corpus::{
    format_timestamp, parse_ad_record, parse_tweet_csv, to_corpus, weekly_counts, AdAccount, AdOutcome, AdRecord,
    CorpusError, DropReason, Grouping, Redaction, Timestamped, TweetSchema, WeeklySeries,
};
use trollkit::textprep::top_terms;
use trollkit::AccountCategory;

use crate::config::Resolved;
use crate::error::CliError;
use crate::shared::{create, finish, load_corpus, open, pipeline, prepare_out, write_metrics, write_with};

fn grouping(cfg: &Resolved) -> Result<Grouping, CliError> {
    cfg.require("grouping")?.parse().map_err(CliError::Usage)
}

/// Weekly counts, or an empty series when nothing carries a timestamp.
fn weekly<T: Timestamped>(records: &[T]) -> Result<WeeklySeries, CliError> {
    match weekly_counts(records, None) {
        Ok(s) => Ok(s),
        Err(CorpusError::EmptyInput) => {
            Ok(WeeklySeries { weeks: Vec::new(), untimestamped: records.len(), out_of_range: 0 })
        }
        Err(e) => Err(e.into()),
    }
}

pub fn tweets(cfg: &mut Resolved) -> Result<(), CliError> {
    let input = cfg.path("input")?;
    let schema = TweetSchema {
        handle: cfg.require("handle_column")?.to_string(),
        content: cfg.require("content_column")?.to_string(),
        publish_date: cfg.require("date_column")?.to_string(),
        category: cfg.require("category_column")?.to_string(),
        followers: cfg.require("followers_column")?.to_string(),
        is_retweet: cfg.require("retweet_column")?.to_string(),
    };
    let grouping = grouping(cfg)?;
    let parsed = parse_tweet_csv(open(&input)?, &schema, cfg.flag("strict")?)?;
    if parsed.records.is_empty() {
        return Err(CorpusError::EmptyInput.into());
    }
    let corpus = to_corpus(&parsed.records, grouping)?;
    let out = prepare_out(cfg)?;

    corpus.write_csv(create(&out.join("corpus.csv"))?)?;
    weekly(&parsed.records)?.write_csv(create(&out.join("weekly.csv"))?)?;
    let retweets = parsed.records.iter().filter(|r| r.is_retweet).count();
    let accounts: std::collections::BTreeSet<&str> = parsed.records.iter().map(|r| r.handle.as_str()).collect();
    let mut report = vec![
        ("rows_kept".to_string(), parsed.records.len().to_string()),
        ("rows_rejected".to_string(), parsed.rejected.len().to_string()),
        ("retweets".to_string(), retweets.to_string()),
        ("accounts".to_string(), accounts.len().to_string()),
        ("documents".to_string(), corpus.len().to_string()),
    ];
    for (line, reason) in &parsed.rejected {
        report.push((format!("rejected_line_{line}"), reason.clone()));
    }
    write_metrics(&out.join("ingest_report.csv"), &report)?;
    finish(cfg, &out)
}

/// Ad files in name order: every regular file of a directory, or the single
/// file given.
fn ad_files(input: &Path) -> Result<Vec<PathBuf>, CliError> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let entries = fs::read_dir(input).map_err(|e| CliError::Input(format!("cannot read {}: {e}", input.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn ads(cfg: &mut Resolved) -> Result<(), CliError> {
    let input = cfg.path("input")?;
    let strict = cfg.flag("strict")?;
    let grouping = grouping(cfg)?;
    let files = ad_files(&input)?;

    let mut kept: Vec<AdRecord> = Vec::new();
    let mut fully_redacted = 0usize;
    let mut empty_text = 0usize;
    let mut malformed: Vec<(String, String)> = Vec::new();
    for path in &files {
        let bytes = fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let text = String::from_utf8_lossy(&bytes);
        match parse_ad_record(&text) {
            Ok(AdOutcome::Kept(r)) => kept.push(r),
            Ok(AdOutcome::Dropped { reason: DropReason::FullyRedacted, .. }) => fully_redacted += 1,
            Ok(AdOutcome::Dropped { reason: DropReason::EmptyText, .. }) => empty_text += 1,
            Err(e) if strict => return Err(CliError::Input(format!("{}: {e}", path.display()))),
            Err(e) => malformed.push((path.file_name().unwrap_or_default().to_string_lossy().into_owned(), e.to_string())),
        }
    }
    if kept.is_empty() {
        return Err(CorpusError::EmptyInput.into());
    }
    let corpus = to_corpus(&kept, grouping)?;
    let out = prepare_out(cfg)?;
    corpus.write_csv(create(&out.join("corpus.csv"))?)?;
    weekly(&kept)?.write_csv(create(&out.join("weekly.csv"))?)?;

    let count = |f: &dyn Fn(&AdRecord) -> bool| kept.iter().filter(|r| f(r)).count().to_string();
    let mut report = vec![
        ("files_read".to_string(), files.len().to_string()),
        ("ads_kept".to_string(), kept.len().to_string()),
        ("dropped_fully_redacted".to_string(), fully_redacted.to_string()),
        ("dropped_empty_text".to_string(), empty_text.to_string()),
        ("partially_redacted".to_string(), count(&|r| r.redaction == Redaction::Partial)),
        ("unknown_account".to_string(), count(&|r| r.account == AdAccount::Unknown)),
        ("event_account".to_string(), count(&|r| r.account == AdAccount::Event)),
        ("malformed".to_string(), malformed.len().to_string()),
        ("documents".to_string(), corpus.len().to_string()),
    ];
    for (file, reason) in malformed {
        report.push((format!("malformed_{file}"), reason));
    }
    write_metrics(&out.join("ingest_report.csv"), &report)?;
    finish(cfg, &out)
}

pub fn report(cfg: &mut Resolved) -> Result<(), CliError> {
    let corpus = load_corpus(cfg)?;
    let k: usize = cfg.get_req("k")?;
    let category: Option<AccountCategory> = cfg.get("category")?;
    if category.is_some() && !corpus.is_labeled() {
        return Err(CliError::Input("--category given but the corpus has no labels".into()));
    }
    let pipeline = pipeline(cfg)?;
    let out = prepare_out(cfg)?;

    let terms = top_terms(&corpus, &pipeline, category, k);
    write_with(&out.join("top_terms.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["rank", "term", "count"])?;
        for (i, (t, c)) in terms.iter().enumerate() {
            w.write_record([(i + 1).to_string(), t.clone(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;

    let mut per_category: BTreeMap<AccountCategory, usize> = BTreeMap::new();
    let mut unlabeled = 0usize;
    for d in corpus.iter() {
        match d.label {
            Some(c) => *per_category.entry(c).or_default() += 1,
            None => unlabeled += 1,
        }
    }
    let first = corpus.iter().filter_map(|d| d.timestamp).min();
    let last = corpus.iter().filter_map(|d| d.timestamp).max();
    let mut summary = vec![("documents".to_string(), corpus.len().to_string())];
    for (c, n) in &per_category {
        summary.push((format!("documents_{c}"), n.to_string()));
    }
    summary.push(("documents_unlabeled".to_string(), unlabeled.to_string()));
    summary.push(("first_timestamp".to_string(), first.as_ref().map(format_timestamp).unwrap_or_default()));
    summary.push(("last_timestamp".to_string(), last.as_ref().map(format_timestamp).unwrap_or_default()));
    write_metrics(&out.join("summary.csv"), &summary)?;
    finish(cfg, &out)
}
