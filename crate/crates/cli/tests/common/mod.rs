//! Fixtures and helpers shared by the CLI test targets.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chrono::{Duration, NaiveDate};
use rand::seq::IndexedRandom;
use trollkit::rng::rng_from_seed;

pub const TWEET_HEADER: &str = "author,content,publish_date,followers,retweet,account_category";

const CATEGORIES: [(&str, [&str; 6]); 4] = [
    ("LeftTroll", ["equality", "justice", "protest", "rally", "union", "climate"]),
    ("RightTroll", ["border", "taxes", "patriot", "veteran", "rifle", "freedom"]),
    ("NewsFeed", ["breaking", "weather", "traffic", "council", "police", "report"]),
    ("HashtagGamer", ["trivia", "puzzle", "riddle", "contest", "answer", "game"]),
];
const SHARED: [&str; 6] = ["people", "america", "video", "watch", "story", "city"];

/// A labeled tweet CSV: four categories, `accounts` handles per category and
/// `per_account` tweets per handle, one tweet per day from 2016-01-04.
pub fn tweet_csv(accounts: usize, per_account: usize, seed: u64) -> String {
    let mut rng = rng_from_seed(seed);
    let mut out = String::from(TWEET_HEADER);
    out.push('\n');
    let mut day = 0u32;
    for (category, words) in CATEGORIES {
        for a in 0..accounts {
            let handle = format!("{}_{a}", category.to_lowercase());
            for t in 0..per_account {
                let mut text: Vec<&str> = (0..4).map(|_| *words.choose(&mut rng).unwrap()).collect();
                text.extend((0..2).map(|_| *SHARED.choose(&mut rng).unwrap()));
                let date = day_stamp(day);
                day += 1;
                out.push_str(&format!("{handle},\"{}\",{date},{},{},{category}\n", text.join(" "), 100 + a, t % 5 == 0));
            }
        }
    }
    out
}

/// `2016-01-04 + days` at noon, in the canonical layout.
fn day_stamp(days: u32) -> String {
    let start = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap().and_hms_opt(12, 0, 0).unwrap();
    (start + Duration::days(i64::from(days))).format("%Y-%m-%d %H:%M:%S").to_string()
}

pub fn ad_file(id: &str, text: &str, landing: &str) -> String {
    format!(
        "Ad ID {id}\nAd Text {text}\nAd Landing Page {landing}\nAd Targeting Location: United States\n  Interests: Martin Luther King\nAd Impressions 1,024\nAd Clicks 57\nAd Spend 120.00 RUB\nAd Creation Date 06/15/16 04:55:21 AM PDT\n"
    )
}

pub fn trollkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trollkit")).args(args).output().expect("binary runs")
}

/// Run and demand success, returning stdout.
pub fn ok(args: &[&str]) -> String {
    let out = trollkit(args);
    assert!(
        out.status.success(),
        "trollkit {args:?} exited {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Every file of a directory, by name.
pub fn snapshot_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}
