//! Tokenization, stemming, vocabularies and sparse document-term matrices.

mod stem;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{AccountCategory, Corpus};
use crate::rng::fnv1a;
use crate::sparse::SparseVector;

pub use stem::stem;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("every term was filtered out of the vocabulary")]
    EmptyVocabulary,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed vocabulary file: {0}")]
    MalformedVocabulary(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Split raw text into lowercase word tokens.
///
/// URLs and `@mentions` are removed, `#` is dropped from hashtags, apostrophes
/// and underscores join their neighbours, every other non-alphanumeric
/// character separates tokens, and tokens shorter than two characters are
/// discarded. Only ASCII letters and digits survive.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let lower = chunk.to_lowercase();
        let end = ["http://", "https://", "www."]
            .iter()
            .filter_map(|p| lower.find(p))
            .min()
            .unwrap_or(lower.len());
        let mut cur = String::new();
        let mut chars = lower[..end].chars().peekable();
        let mut flush = |cur: &mut String| {
            if cur.len() >= 2 {
                out.push(std::mem::take(cur));
            } else {
                cur.clear();
            }
        };
        while let Some(c) = chars.next() {
            match c {
                '@' => {
                    flush(&mut cur);
                    while chars.next_if(|n| n.is_alphanumeric() || *n == '_').is_some() {}
                }
                c if c.is_ascii_alphanumeric() => cur.push(c),
                '\'' | '\u{2019}' | '_' => {}
                _ => flush(&mut cur),
            }
        }
        flush(&mut cur);
    }
    out
}

pub fn remove_stopwords(tokens: Vec<String>, stoplist: &HashSet<String>) -> Vec<String> {
    tokens.into_iter().filter(|t| !stoplist.contains(t)).collect()
}

pub fn default_stoplist() -> HashSet<String> {
    parse_stoplist(DEFAULT_STOPWORDS)
}

/// One lowercase term per line; blank lines and `#` comments are skipped.
pub fn parse_stoplist(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Tokenize, drop stopwords, stem.
#[derive(Clone, Debug)]
pub struct Pipeline {
    stoplist: HashSet<String>,
}

impl Default for Pipeline {
    fn default() -> Self {
        Self { stoplist: default_stoplist() }
    }
}

impl Pipeline {
    pub fn new(stoplist: HashSet<String>) -> Self {
        Self { stoplist }
    }

    pub fn stoplist(&self) -> &HashSet<String> {
        &self.stoplist
    }

    pub fn analyze(&self, text: &str) -> Vec<String> {
        remove_stopwords(tokenize(text), &self.stoplist)
            .iter()
            .map(|t| stem(t))
            .collect()
    }

    pub fn analyze_corpus(&self, corpus: &Corpus) -> Vec<Vec<String>> {
        corpus.documents().par_iter().map(|d| self.analyze(&d.text)).collect()
    }

    /// Order-independent hash of the stoplist.
    pub fn fingerprint(&self) -> u64 {
        let mut words: Vec<&str> = self.stoplist.iter().map(String::as_str).collect();
        words.sort_unstable();
        fnv1a(words.join("\n").as_bytes())
    }
}

/// Term index over `[0, V)` with document frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    /// Build from analyzed documents. Terms appearing in fewer than `min_df`
    /// documents or in more than `max_df_frac` of them are dropped; the rest
    /// are sorted lexicographically.
    pub fn build(docs: &[Vec<String>], min_df: usize, max_df_frac: f64) -> Result<Self, TextError> {
        if docs.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        if min_df == 0 {
            return Err(TextError::InvalidParameter("min_df must be at least 1".into()));
        }
        if !(max_df_frac > 0.0 && max_df_frac <= 1.0) {
            return Err(TextError::InvalidParameter(format!("max_df_frac {max_df_frac} not in (0, 1]")));
        }
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            let distinct: HashSet<&str> = doc.iter().map(String::as_str).collect();
            for t in distinct {
                *df.entry(t).or_default() += 1;
            }
        }
        let m = docs.len() as f64;
        let mut kept: Vec<(&str, usize)> = df
            .into_iter()
            .filter(|&(_, f)| f >= min_df && (f as f64) / m <= max_df_frac)
            .collect();
        if kept.is_empty() {
            return Err(TextError::EmptyVocabulary);
        }
        kept.sort_unstable();
        Self::from_parts(
            kept.iter().map(|(t, _)| t.to_string()).collect(),
            kept.iter().map(|&(_, f)| f).collect(),
            docs.len(),
        )
    }

    pub fn from_parts(terms: Vec<String>, doc_freq: Vec<usize>, n_docs: usize) -> Result<Self, TextError> {
        if terms.len() != doc_freq.len() {
            return Err(TextError::MalformedVocabulary("term and frequency counts differ".into()));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(TextError::MalformedVocabulary(format!("duplicate term `{t}`")));
            }
        }
        Ok(Self { terms, index, doc_freq, n_docs })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    /// Number of documents the vocabulary was built from.
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn fingerprint(&self) -> u64 {
        let mut buf = format!("{}\n", self.n_docs);
        for (t, f) in self.terms.iter().zip(&self.doc_freq) {
            buf.push_str(&format!("{t}\t{f}\n"));
        }
        fnv1a(buf.as_bytes())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), TextError> {
        writeln!(w, "trollkit-vocab v1")?;
        writeln!(w, "n_docs {}", self.n_docs)?;
        for (t, f) in self.terms.iter().zip(&self.doc_freq) {
            writeln!(w, "{t}\t{f}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, TextError> {
        let bad = |m: &str| TextError::MalformedVocabulary(m.to_string());
        let mut lines = r.lines();
        if lines.next().transpose()?.as_deref() != Some("trollkit-vocab v1") {
            return Err(bad("missing header"));
        }
        let n_docs = lines
            .next()
            .transpose()?
            .and_then(|l| l.strip_prefix("n_docs ").and_then(|n| n.parse().ok()))
            .ok_or_else(|| bad("missing n_docs line"))?;
        let mut terms = Vec::new();
        let mut doc_freq = Vec::new();
        for line in lines {
            let line = line?;
            let (t, f) = line.split_once('\t').ok_or_else(|| bad("expected term<TAB>doc_freq"))?;
            terms.push(t.to_string());
            doc_freq.push(f.parse().map_err(|_| bad("bad doc_freq"))?);
        }
        Self::from_parts(terms, doc_freq, n_docs)
    }
}

/// Per-document sparse term counts.
#[derive(Clone, Debug, PartialEq)]
pub struct DocTermMatrix {
    n_terms: usize,
    rows: Vec<Vec<(usize, u32)>>,
    doc_lengths: Vec<usize>,
}

impl DocTermMatrix {
    /// Rows must have strictly increasing term indices below `n_terms` and
    /// positive counts.
    pub fn from_rows(n_terms: usize, rows: Vec<Vec<(usize, u32)>>) -> Result<Self, TextError> {
        for row in &rows {
            if row.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(TextError::InvalidParameter("row indices not strictly increasing".into()));
            }
            if row.iter().any(|&(t, c)| t >= n_terms || c == 0) {
                return Err(TextError::InvalidParameter("term out of range or zero count".into()));
            }
        }
        let doc_lengths = rows.iter().map(|r| r.iter().map(|&(_, c)| c as usize).sum()).collect();
        Ok(Self { n_terms, rows, doc_lengths })
    }

    /// Build from per-document token id lists.
    pub fn from_token_ids(n_terms: usize, docs: &[Vec<usize>]) -> Result<Self, TextError> {
        let rows = docs
            .iter()
            .map(|doc| {
                let mut counts: HashMap<usize, u32> = HashMap::new();
                for &t in doc {
                    *counts.entry(t).or_default() += 1;
                }
                let mut row: Vec<(usize, u32)> = counts.into_iter().collect();
                row.sort_unstable();
                row
            })
            .collect();
        Self::from_rows(n_terms, rows)
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn rows(&self) -> &[Vec<(usize, u32)>] {
        &self.rows
    }

    pub fn row(&self, d: usize) -> &[(usize, u32)] {
        &self.rows[d]
    }

    pub fn doc_lengths(&self) -> &[usize] {
        &self.doc_lengths
    }

    pub fn total_tokens(&self) -> usize {
        self.doc_lengths.iter().sum()
    }

    pub fn subset(&self, indices: &[usize]) -> DocTermMatrix {
        DocTermMatrix {
            n_terms: self.n_terms,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            doc_lengths: indices.iter().map(|&i| self.doc_lengths[i]).collect(),
        }
    }

    /// Raw counts as real-valued sparse rows.
    pub fn to_sparse_rows(&self) -> Vec<SparseVector> {
        self.rows
            .iter()
            .map(|r| {
                SparseVector::new(
                    self.n_terms,
                    r.iter().map(|p| p.0).collect(),
                    r.iter().map(|p| f64::from(p.1)).collect(),
                )
                .expect("validated rows")
            })
            .collect()
    }

    /// Sparse triplets `doc_id,term,count`.
    pub fn write_triplets<W: Write>(&self, w: W, doc_ids: &[String], vocab: &Vocabulary) -> Result<(), TextError> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["doc_id", "term", "count"])?;
        for (row, id) in self.rows.iter().zip(doc_ids) {
            for &(t, c) in row {
                w.write_record([id.as_str(), vocab.term(t), &c.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Count out-of-vocabulary-free term frequencies for each analyzed document.
pub fn vectorize(docs: &[Vec<String>], vocab: &Vocabulary) -> DocTermMatrix {
    let ids: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().filter_map(|t| vocab.get(t)).collect())
        .collect();
    DocTermMatrix::from_token_ids(vocab.len(), &ids).expect("vocabulary indices are in range")
}

/// tf-idf weights with natural-log idf `ln(M / df)`, each row scaled to unit
/// L2 norm. All-zero rows stay zero.
pub fn tfidf(matrix: &DocTermMatrix, vocab: &Vocabulary) -> Vec<SparseVector> {
    let m = vocab.n_docs() as f64;
    let idf: Vec<f64> = vocab
        .doc_freq()
        .iter()
        .map(|&df| if df == 0 { 0.0 } else { (m / df as f64).ln() })
        .collect();
    matrix
        .rows()
        .iter()
        .map(|row| {
            let pairs: Vec<(usize, f64)> = row.iter().map(|&(t, c)| (t, f64::from(c) * idf[t])).collect();
            let norm = pairs.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
            let pairs = if norm > 0.0 {
                pairs.into_iter().map(|(t, w)| (t, w / norm)).collect()
            } else {
                Vec::new()
            };
            SparseVector::from_pairs(matrix.n_terms(), pairs).expect("finite weights")
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    Counts,
    TfIdf,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Counts => "counts",
            Weighting::TfIdf => "tfidf",
        }
    }

    pub fn apply(self, matrix: &DocTermMatrix, vocab: &Vocabulary) -> Vec<SparseVector> {
        match self {
            Weighting::Counts => matrix.to_sparse_rows(),
            Weighting::TfIdf => tfidf(matrix, vocab),
        }
    }
}

impl FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "counts" => Ok(Weighting::Counts),
            "tfidf" => Ok(Weighting::TfIdf),
            other => Err(format!("unknown weighting `{other}` (expected counts or tfidf)")),
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binds a trained model to the vocabulary, weighting and stoplist that
/// produced its inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureSpace {
    pub n_features: usize,
    pub weighting: Weighting,
    pub fingerprint: u64,
}

impl FeatureSpace {
    pub fn new(vocab: &Vocabulary, weighting: Weighting, pipeline: &Pipeline) -> Self {
        let mut bytes = vocab.fingerprint().to_le_bytes().to_vec();
        bytes.extend_from_slice(&pipeline.fingerprint().to_le_bytes());
        bytes.extend_from_slice(weighting.as_str().as_bytes());
        Self { n_features: vocab.len(), weighting, fingerprint: fnv1a(&bytes) }
    }

    /// A feature space not tied to any vocabulary, for hand-built data.
    pub fn anonymous(n_features: usize, weighting: Weighting) -> Self {
        Self { n_features, weighting, fingerprint: 0 }
    }

    /// `features <n> <weighting> <fingerprint>`, the line model files carry.
    pub fn header_line(&self) -> String {
        format!("features {} {} {:016x}", self.n_features, self.weighting, self.fingerprint)
    }

    pub fn parse_header_line(line: &str) -> Option<Self> {
        let mut it = line.strip_prefix("features ")?.split(' ');
        let n_features = it.next()?.parse().ok()?;
        let weighting = it.next()?.parse().ok()?;
        let fingerprint = u64::from_str_radix(it.next()?, 16).ok()?;
        it.next().is_none().then_some(Self { n_features, weighting, fingerprint })
    }
}

/// The most frequent stems, optionally restricted to one category.
/// Sorted by descending count, ties broken lexicographically.
pub fn top_terms(
    corpus: &Corpus,
    pipeline: &Pipeline,
    filter: Option<AccountCategory>,
    k: usize,
) -> Vec<(String, u64)> {
    let selected: Vec<&str> = corpus
        .iter()
        .filter(|d| filter.is_none() || d.label == filter)
        .map(|d| d.text.as_str())
        .collect();
    let per_doc: Vec<HashMap<String, u64>> = selected
        .par_iter()
        .map(|text| {
            let mut m = HashMap::new();
            for s in pipeline.analyze(text) {
                *m.entry(s).or_default() += 1;
            }
            m
        })
        .collect();
    let mut counts: HashMap<String, u64> = HashMap::new();
    for m in per_doc {
        for (s, c) in m {
            *counts.entry(s).or_default() += c;
        }
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Source};
    use proptest::prelude::*;

    fn docs(texts: &[&str]) -> Vec<Vec<String>> {
        texts.iter().map(|t| t.split_whitespace().map(str::to_string).collect()).collect()
    }

    fn corpus(texts: &[(&str, Option<AccountCategory>)]) -> Corpus {
        Corpus::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, (t, l))| Document::new(format!("d{i}"), *t, *l, Source::Synthetic))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Black Lives Matter!"), ["black", "lives", "matter"]);
        assert_eq!(tokenize("#WakeUpAmerica now"), ["wakeupamerica", "now"]);
        assert_eq!(tokenize("see https://t.co/xyz @user"), ["see"]);
        assert_eq!(tokenize("RT @bob: don't stop"), ["rt", "dont", "stop"]);
        assert_eq!(tokenize("a b 2017 x"), ["2017"]);
        assert_eq!(tokenize("go:https://x.com"), ["go"]);
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn stopword_examples() {
        let stop = default_stoplist();
        let toks = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(remove_stopwords(toks(&["the", "gun", "is"]), &stop), ["gun"]);
        assert!(remove_stopwords(vec![], &stop).is_empty());
        assert_eq!(remove_stopwords(toks(&["trump"]), &HashSet::new()), ["trump"]);
        assert!((150..=200).contains(&stop.len()));
    }

    proptest! {
        #[test]
        fn tokenize_is_stable(text in "\\PC{0,80}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(&once, &twice);
            for t in &once {
                prop_assert!(t.len() >= 2 && t.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()));
            }
        }
    }

    #[test]
    fn vocabulary_filters() {
        let v = Vocabulary::build(&docs(&["gun vote", "gun"]), 2, 1.0).unwrap();
        assert_eq!(v.terms(), ["gun"]);

        let mut ten = vec!["rare common"];
        ten.extend(std::iter::repeat_n("common other", 9));
        let v = Vocabulary::build(&docs(&ten), 2, 1.0).unwrap();
        assert!(v.get("rare").is_none());
        assert!(v.get("common").is_some());

        let v = Vocabulary::build(&docs(&["a1 b1", "a1 c1"]), 1, 0.5).unwrap();
        assert_eq!(v.terms(), ["b1", "c1"]);

        assert!(matches!(Vocabulary::build(&docs(&["x1"]), 2, 1.0), Err(TextError::EmptyVocabulary)));
        assert!(matches!(Vocabulary::build(&[], 1, 1.0), Err(TextError::EmptyCorpus)));
    }

    proptest! {
        #[test]
        fn vocabulary_ignores_document_order(
            texts in prop::collection::vec(prop::collection::vec("[a-e]{2}", 0..6), 1..10),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let mut shuffled = texts.clone();
            shuffled.shuffle(&mut crate::rng::rng_from_seed(seed));
            let a = Vocabulary::build(&texts, 1, 1.0);
            let b = Vocabulary::build(&shuffled, 1, 1.0);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "one build failed"),
            }
        }

        #[test]
        fn count_rows_sum_to_lengths(texts in prop::collection::vec(prop::collection::vec("[a-d]{2}", 0..8), 1..8)) {
            let Ok(v) = Vocabulary::build(&texts, 1, 1.0) else { return Ok(()) };
            let m = vectorize(&texts, &v);
            for (d, row) in m.rows().iter().enumerate() {
                let s: usize = row.iter().map(|p| p.1 as usize).sum();
                prop_assert_eq!(s, m.doc_lengths()[d]);
                prop_assert_eq!(s, texts[d].len());
            }
            for r in tfidf(&m, &v) {
                let n = r.norm();
                prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn vectorize_examples() {
        let v = Vocabulary::build(&docs(&["gun vote"]), 1, 1.0).unwrap();
        let m = vectorize(&docs(&["gun gun vote", "zzz"]), &v);
        assert_eq!(m.row(0), &[(0, 2), (1, 1)]);
        assert_eq!(m.doc_lengths(), &[3, 0]);
        assert!(m.row(1).is_empty());
        assert_eq!(vectorize(&[], &v).n_docs(), 0);
    }

    #[test]
    fn tfidf_examples() {
        // Term in every document: idf 0.
        let d = docs(&["aa bb", "aa cc"]);
        let v = Vocabulary::build(&d, 1, 1.0).unwrap();
        let w = tfidf(&vectorize(&d, &v), &v);
        assert_eq!(w[0].get(v.get("aa").unwrap()), 0.0);

        // Single document, single term: normalized weight 1. idf would be 0,
        // so use a vocabulary built over a larger collection.
        let v = Vocabulary::from_parts(vec!["xx".into()], vec![1], 2).unwrap();
        let w = tfidf(&vectorize(&docs(&["xx xx"]), &v), &v);
        assert!((w[0].get(0) - 1.0).abs() < 1e-12);

        // Two terms with equal tf-idf: 1/sqrt(2) each.
        let v = Vocabulary::from_parts(vec!["p1".into(), "q1".into()], vec![1, 1], 3).unwrap();
        let w = tfidf(&vectorize(&docs(&["p1 q1"]), &v), &v);
        assert!((w[0].get(0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!((w[0].get(1) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn top_terms_examples() {
        let p = Pipeline::new(HashSet::new());
        let c = corpus(&[("aa aa bb", None)]);
        assert_eq!(top_terms(&c, &p, None, 2), vec![("aa".into(), 2), ("bb".into(), 1)]);
        assert_eq!(top_terms(&c, &p, None, 30).len(), 2);

        let c = corpus(&[
            ("police brutality police", Some(AccountCategory::LeftTroll)),
            ("trump trump maga", Some(AccountCategory::RightTroll)),
        ]);
        let left = top_terms(&c, &p, Some(AccountCategory::LeftTroll), 10);
        assert_eq!(left, vec![("polic".into(), 2), ("brutal".into(), 1)]);
    }

    #[test]
    fn vocabulary_file_round_trip() {
        let v = Vocabulary::build(&docs(&["gun vote", "gun"]), 1, 1.0).unwrap();
        let mut buf = Vec::new();
        v.write(&mut buf).unwrap();
        let back = Vocabulary::read(buf.as_slice()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.fingerprint(), v.fingerprint());
    }

    #[test]
    fn pipeline_stems_after_stopwords() {
        let p = Pipeline::default();
        assert_eq!(p.analyze("The communities are happier together"), ["communiti", "happier", "togeth"]);
    }
}
