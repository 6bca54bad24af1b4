//! Latent Dirichlet allocation: a forward simulator of the generative process,
//! collapsed Gibbs inference, top-word reports, held-out perplexity and
//! choice of topic count.
//!
//! Tokens are ordered document by document, and within a document by term
//! index, each term repeated by its count. Assignment vectors, marginals and
//! the exact-enumeration oracle all use that order.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Document, Source};
use crate::rng::{derive_named, rng_from_seed, Rng};
use crate::textprep::{DocTermMatrix, Vocabulary};

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("document-term matrix has no tokens")]
    EmptyMatrix,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("exact enumeration needs {k}^{tokens} states, above the 10^7 limit")]
    TooLarge { k: usize, tokens: usize },
    #[error("held-out matrix has {got} terms, model has {expected}")]
    VocabMismatch { expected: usize, got: usize },
    #[error("held-out matrix has no tokens")]
    EmptyHeldout,
    #[error("split leaves {train} training and {heldout} held-out documents; need at least 2 of each")]
    InsufficientDocuments { train: usize, heldout: usize },
    #[error("need at least one candidate topic count")]
    NoCandidates,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GibbsConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub sample_lag: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { iterations: 1000, burn_in: 500, seed: 0, sample_lag: 10 }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<(), LdaError> {
        if self.iterations == 0 {
            return Err(LdaError::InvalidConfig("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(LdaError::InvalidConfig(format!(
                "burn_in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.sample_lag == 0 {
            return Err(LdaError::InvalidConfig("sample_lag must be positive".into()));
        }
        Ok(())
    }

    /// Whether sweep `s` (1-based) contributes to averaged estimates.
    fn is_sample(&self, s: usize) -> bool {
        s > self.burn_in && (s - self.burn_in).is_multiple_of(self.sample_lag)
    }
}

fn check_priors(k: usize, alpha: f64, eta: f64) -> Result<(), LdaError> {
    if k == 0 {
        return Err(LdaError::InvalidHyperparameter("K must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(LdaError::InvalidHyperparameter(format!("alpha must be positive, got {alpha}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(LdaError::InvalidHyperparameter(format!("eta must be positive, got {eta}")));
    }
    Ok(())
}

/// Expand count rows into per-document word lists in canonical token order.
fn expand_tokens(matrix: &DocTermMatrix) -> Vec<Vec<usize>> {
    matrix
        .rows()
        .iter()
        .map(|row| row.iter().flat_map(|&(t, c)| std::iter::repeat_n(t, c as usize)).collect())
        .collect()
}

/// A fitted (or initialized) topic model: final-state count tables plus
/// averaged estimates of the topic-word and document-topic distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct LdaModel {
    k: usize,
    v: usize,
    alpha: f64,
    eta: f64,
    /// K×V, row-major.
    n_kv: Vec<u32>,
    /// M×K, row-major.
    n_dk: Vec<u32>,
    n_k: Vec<u64>,
    words: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    phi: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
    vocab_fingerprint: Option<u64>,
}

impl LdaModel {
    /// A model with no training documents whose topics are all uniform over
    /// the vocabulary.
    pub fn uniform(k: usize, v: usize, alpha: f64, eta: f64) -> Result<Self, LdaError> {
        check_priors(k, alpha, eta)?;
        if v == 0 {
            return Err(LdaError::EmptyMatrix);
        }
        Ok(Self {
            k,
            v,
            alpha,
            eta,
            n_kv: vec![0; k * v],
            n_dk: Vec::new(),
            n_k: vec![0; k],
            words: Vec::new(),
            z: Vec::new(),
            phi: vec![vec![1.0 / v as f64; v]; k],
            theta: Vec::new(),
            vocab_fingerprint: None,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n_docs(&self) -> usize {
        self.words.len()
    }

    pub fn topic_word_count(&self, k: usize, v: usize) -> u32 {
        self.n_kv[k * self.v + v]
    }

    pub fn doc_topic_count(&self, d: usize, k: usize) -> u32 {
        self.n_dk[d * self.k + k]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.n_k
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.z
    }

    /// Averaged topic-word distributions, K rows of length V.
    pub fn phi(&self) -> &[Vec<f64>] {
        &self.phi
    }

    /// Averaged document-topic distributions, M rows of length K.
    pub fn theta(&self) -> &[Vec<f64>] {
        &self.theta
    }

    pub fn vocab_fingerprint(&self) -> Option<u64> {
        self.vocab_fingerprint
    }

    /// Record which vocabulary the model's term indices refer to.
    pub fn bind_vocabulary(&mut self, vocab: &Vocabulary) {
        self.vocab_fingerprint = Some(vocab.fingerprint());
    }

    /// Final-state `(n_kv + η) / (n_k + Vη)`.
    pub fn final_phi(&self, k: usize, v: usize) -> f64 {
        (f64::from(self.n_kv[k * self.v + v]) + self.eta) / (self.n_k[k] as f64 + self.v as f64 * self.eta)
    }

    /// Check every count-table invariant against the assignments.
    pub fn check_invariants(&self) -> Result<(), String> {
        let (k, v) = (self.k, self.v);
        let mut n_kv = vec![0u32; k * v];
        let mut n_dk = vec![0u32; self.words.len() * k];
        let mut n_k = vec![0u64; k];
        if self.z.len() != self.words.len() {
            return Err("assignment and document counts differ".into());
        }
        for (d, (words, zs)) in self.words.iter().zip(&self.z).enumerate() {
            if words.len() != zs.len() {
                return Err(format!("document {d}: {} tokens but {} assignments", words.len(), zs.len()));
            }
            for (&w, &t) in words.iter().zip(zs) {
                if t >= k {
                    return Err(format!("document {d}: topic {t} out of range"));
                }
                n_kv[t * v + w] += 1;
                n_dk[d * k + t] += 1;
                n_k[t] += 1;
            }
        }
        if n_kv != self.n_kv {
            return Err("topic-word counts disagree with assignments".into());
        }
        if n_dk != self.n_dk {
            return Err("document-topic counts disagree with assignments".into());
        }
        if n_k != self.n_k {
            return Err("topic totals disagree with assignments".into());
        }
        for (t, &total) in self.n_k.iter().enumerate() {
            let row: u64 = self.n_kv[t * v..(t + 1) * v].iter().map(|&c| u64::from(c)).sum();
            if row != total {
                return Err(format!("topic {t}: row sum {row} but total {total}"));
            }
        }
        let tokens: usize = self.words.iter().map(Vec::len).sum();
        if self.n_k.iter().sum::<u64>() != tokens as u64 {
            return Err("topic totals do not sum to the token count".into());
        }
        Ok(())
    }
}

/// A single collapsed Gibbs chain over a fixed corpus.
pub struct GibbsSampler {
    model: LdaModel,
    rng: Rng,
    probs: Vec<f64>,
    sweeps: usize,
}

impl GibbsSampler {
    /// Initialize every assignment uniformly at random.
    pub fn new(matrix: &DocTermMatrix, k: usize, alpha: f64, eta: f64, seed: u64) -> Result<Self, LdaError> {
        check_priors(k, alpha, eta)?;
        if matrix.total_tokens() == 0 || matrix.n_terms() == 0 {
            return Err(LdaError::EmptyMatrix);
        }
        let v = matrix.n_terms();
        let words = expand_tokens(matrix);
        let mut rng = rng_from_seed(seed);
        let mut n_kv = vec![0u32; k * v];
        let mut n_dk = vec![0u32; words.len() * k];
        let mut n_k = vec![0u64; k];
        let z: Vec<Vec<usize>> = words
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.random_range(0..k);
                        n_kv[t * v + w] += 1;
                        n_dk[d * k + t] += 1;
                        n_k[t] += 1;
                        t
                    })
                    .collect()
            })
            .collect();
        let mut model = LdaModel {
            k,
            v,
            alpha,
            eta,
            n_kv,
            n_dk,
            n_k,
            words,
            z,
            phi: Vec::new(),
            theta: Vec::new(),
            vocab_fingerprint: None,
        };
        let (phi, theta) = point_estimates(&model);
        model.phi = phi;
        model.theta = theta;
        Ok(Self { model, rng, probs: vec![0.0; k], sweeps: 0 })
    }

    /// Resample every token once.
    pub fn sweep(&mut self) {
        let m = &mut self.model;
        let (k, v) = (m.k, m.v);
        let v_eta = v as f64 * m.eta;
        for d in 0..m.words.len() {
            for n in 0..m.words[d].len() {
                let w = m.words[d][n];
                let old = m.z[d][n];
                m.n_kv[old * v + w] -= 1;
                m.n_dk[d * k + old] -= 1;
                m.n_k[old] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    let p = (f64::from(m.n_dk[d * k + t]) + m.alpha) * (f64::from(m.n_kv[t * v + w]) + m.eta)
                        / (m.n_k[t] as f64 + v_eta);
                    total += p;
                    self.probs[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.probs.iter().position(|&c| u < c).unwrap_or(k - 1);
                m.z[d][n] = new;
                m.n_kv[new * v + w] += 1;
                m.n_dk[d * k + new] += 1;
                m.n_k[new] += 1;
            }
        }
        self.sweeps += 1;
        debug_assert_eq!(m.check_invariants(), Ok(()));
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn model(&self) -> &LdaModel {
        &self.model
    }

    /// The current state as a model whose estimates are the current point
    /// estimates.
    pub fn into_model(mut self) -> LdaModel {
        let (phi, theta) = point_estimates(&self.model);
        self.model.phi = phi;
        self.model.theta = theta;
        self.model
    }
}

fn point_estimates(m: &LdaModel) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let phi = (0..m.k).map(|t| (0..m.v).map(|w| m.final_phi(t, w)).collect()).collect();
    let theta = m
        .words
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            let denom = doc.len() as f64 + m.k as f64 * m.alpha;
            (0..m.k).map(|t| (f64::from(m.n_dk[d * m.k + t]) + m.alpha) / denom).collect()
        })
        .collect();
    (phi, theta)
}

fn accumulate(sum: &mut [Vec<f64>], add: &[Vec<f64>]) {
    for (s, a) in sum.iter_mut().zip(add) {
        for (x, y) in s.iter_mut().zip(a) {
            *x += y;
        }
    }
}

/// Fit by collapsed Gibbs sampling. The returned model carries the final
/// assignment state and the mean of the point estimates taken every
/// `sample_lag` sweeps after burn-in.
pub fn fit_gibbs(matrix: &DocTermMatrix, k: usize, alpha: f64, eta: f64, config: &GibbsConfig) -> Result<LdaModel, LdaError> {
    config.validate()?;
    let mut sampler = GibbsSampler::new(matrix, k, alpha, eta, config.seed)?;
    let mut phi_sum = vec![vec![0.0; sampler.model.v]; k];
    let mut theta_sum = vec![vec![0.0; k]; sampler.model.words.len()];
    let mut n_samples = 0usize;
    for s in 1..=config.iterations {
        sampler.sweep();
        if config.is_sample(s) {
            let (phi, theta) = point_estimates(&sampler.model);
            accumulate(&mut phi_sum, &phi);
            accumulate(&mut theta_sum, &theta);
            n_samples += 1;
        }
    }
    if let Err(e) = sampler.model.check_invariants() {
        panic!("Gibbs count tables corrupted: {e}");
    }
    let mut model = sampler.into_model();
    if n_samples > 0 {
        let scale = 1.0 / n_samples as f64;
        model.phi = normalize_rows(phi_sum, scale);
        model.theta = normalize_rows(theta_sum, scale);
    }
    Ok(model)
}

/// Scale rows and renormalize away accumulated rounding.
fn normalize_rows(rows: Vec<Vec<f64>>, scale: f64) -> Vec<Vec<f64>> {
    rows.into_iter()
        .map(|r| {
            let r: Vec<f64> = r.into_iter().map(|x| x * scale).collect();
            let s: f64 = r.iter().sum();
            r.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Per-token topic marginals and pairwise same-topic probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenMarginals {
    /// T×K: probability that token `i` is assigned topic `k`.
    pub marginals: Vec<Vec<f64>>,
    /// T×T: probability that tokens `i` and `j` share a topic.
    pub co_assignment: Vec<Vec<f64>>,
}

impl TokenMarginals {
    fn zeros(t: usize, k: usize) -> Self {
        Self { marginals: vec![vec![0.0; k]; t], co_assignment: vec![vec![0.0; t]; t] }
    }

    fn add(&mut self, z: &[usize], weight: f64) {
        for (i, &zi) in z.iter().enumerate() {
            self.marginals[i][zi] += weight;
            for (j, &zj) in z.iter().enumerate().skip(i + 1) {
                if zi == zj {
                    self.co_assignment[i][j] += weight;
                }
            }
        }
    }

    fn finish(mut self, total: f64) -> Self {
        let t = self.marginals.len();
        for row in &mut self.marginals {
            row.iter_mut().for_each(|x| *x /= total);
        }
        for i in 0..t {
            self.co_assignment[i][i] = total;
            for j in i + 1..t {
                self.co_assignment[j][i] = self.co_assignment[i][j];
            }
        }
        for row in &mut self.co_assignment {
            row.iter_mut().for_each(|x| *x /= total);
        }
        self
    }
}

/// Empirical marginals from a Gibbs chain: every `sample_lag`-th sweep after
/// burn-in counts as one sample.
pub fn sample_token_marginals(
    matrix: &DocTermMatrix,
    k: usize,
    alpha: f64,
    eta: f64,
    config: &GibbsConfig,
) -> Result<TokenMarginals, LdaError> {
    config.validate()?;
    let mut sampler = GibbsSampler::new(matrix, k, alpha, eta, config.seed)?;
    let mut acc = TokenMarginals::zeros(matrix.total_tokens(), k);
    let mut flat = Vec::with_capacity(matrix.total_tokens());
    let mut n = 0usize;
    for s in 1..=config.iterations {
        sampler.sweep();
        if config.is_sample(s) {
            flat.clear();
            sampler.model.z.iter().for_each(|zs| flat.extend_from_slice(zs));
            acc.add(&flat, 1.0);
            n += 1;
        }
    }
    Ok(acc.finish(n as f64))
}

const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// `ln Γ(a + n) − ln Γ(a)` for `n = 0..=max`.
fn log_rising(a: f64, max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..max {
        acc += (a + i as f64).ln();
        out.push(acc);
    }
    out
}

/// Exact posterior marginals by enumerating all `K^T` joint assignments,
/// each weighted by the collapsed joint probability.
pub fn posterior_brute_force(matrix: &DocTermMatrix, k: usize, alpha: f64, eta: f64) -> Result<TokenMarginals, LdaError> {
    check_priors(k, alpha, eta)?;
    let words = expand_tokens(matrix);
    let t_total = matrix.total_tokens();
    if t_total == 0 {
        return Err(LdaError::EmptyMatrix);
    }
    if (k as f64).powi(t_total as i32) > BRUTE_FORCE_LIMIT {
        return Err(LdaError::TooLarge { k, tokens: t_total });
    }
    let v = matrix.n_terms();
    let m = words.len();
    let flat_words: Vec<usize> = words.iter().flatten().copied().collect();
    let flat_docs: Vec<usize> = words.iter().enumerate().flat_map(|(d, doc)| std::iter::repeat_n(d, doc.len())).collect();
    let rise_alpha = log_rising(alpha, t_total);
    let rise_eta = log_rising(eta, t_total);
    let rise_v_eta = log_rising(v as f64 * eta, t_total);

    let mut z = vec![0usize; t_total];
    let mut n_dk = vec![0usize; m * k];
    let mut n_kv = vec![0usize; k * v];
    let mut n_k = vec![0usize; k];
    for i in 0..t_total {
        n_dk[flat_docs[i] * k] += 1;
        n_kv[flat_words[i]] += 1;
        n_k[0] += 1;
    }
    // Document-length normalizers are constant across assignments and drop out.
    let log_weight = |n_dk: &[usize], n_kv: &[usize], n_k: &[usize]| -> f64 {
        n_dk.iter().map(|&c| rise_alpha[c]).sum::<f64>() + n_kv.iter().map(|&c| rise_eta[c]).sum::<f64>()
            - n_k.iter().map(|&c| rise_v_eta[c]).sum::<f64>()
    };

    let mut acc = TokenMarginals::zeros(t_total, k);
    let mut max_log = f64::NEG_INFINITY;
    let mut total = 0.0;
    loop {
        let lw = log_weight(&n_dk, &n_kv, &n_k);
        if lw > max_log {
            let rescale = (max_log - lw).exp();
            total *= rescale;
            acc.marginals.iter_mut().flatten().for_each(|x| *x *= rescale);
            acc.co_assignment.iter_mut().flatten().for_each(|x| *x *= rescale);
            max_log = lw;
        }
        let w = (lw - max_log).exp();
        acc.add(&z, w);
        total += w;

        // Odometer step over assignments.
        let mut i = 0;
        loop {
            if i == t_total {
                return Ok(acc.finish(total));
            }
            let (d, word, old) = (flat_docs[i], flat_words[i], z[i]);
            let new = (old + 1) % k;
            n_dk[d * k + old] -= 1;
            n_kv[old * v + word] -= 1;
            n_k[old] -= 1;
            n_dk[d * k + new] += 1;
            n_kv[new * v + word] += 1;
            n_k[new] += 1;
            z[i] = new;
            if new != 0 {
                break;
            }
            i += 1;
        }
    }
}

/// The `n` most probable terms of each topic under the final-state estimate,
/// as term indices. Ties go to the lower index.
pub fn topic_top_indices(model: &LdaModel, n: usize) -> Vec<Vec<(usize, f64)>> {
    (0..model.k)
        .map(|t| {
            let mut ranked: Vec<(usize, f64)> = (0..model.v).map(|w| (w, model.final_phi(t, w))).collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            ranked.truncate(n);
            ranked
        })
        .collect()
}

/// The `n` most probable stems of each topic, ties broken lexicographically.
pub fn topic_top_words(model: &LdaModel, vocab: &Vocabulary, n: usize) -> Vec<Vec<(String, f64)>> {
    (0..model.k)
        .map(|t| {
            let mut ranked: Vec<(&str, f64)> = (0..model.v).map(|w| (vocab.term(w), model.final_phi(t, w))).collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
            ranked.truncate(n);
            ranked.into_iter().map(|(s, p)| (s.to_string(), p)).collect()
        })
        .collect()
}

/// Long-form topic report: `topic,rank,term,probability`, ranks from 1.
pub fn write_topics_csv<W: Write>(w: W, topics: &[Vec<(String, f64)>]) -> Result<(), LdaError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["topic", "rank", "term", "probability"])?;
    for (t, list) in topics.iter().enumerate() {
        for (r, (term, p)) in list.iter().enumerate() {
            w.write_record([t.to_string(), (r + 1).to_string(), term.clone(), format!("{p:.6}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The same report pivoted to one column of terms per topic.
pub fn write_topics_wide_csv<W: Write>(w: W, topics: &[Vec<(String, f64)>]) -> Result<(), LdaError> {
    let mut w = csv::Writer::from_writer(w);
    let mut header = vec!["rank".to_string()];
    header.extend((0..topics.len()).map(|t| format!("topic_{t}")));
    w.write_record(&header)?;
    let depth = topics.iter().map(Vec::len).max().unwrap_or(0);
    for r in 0..depth {
        let mut row = vec![(r + 1).to_string()];
        row.extend(topics.iter().map(|l| l.get(r).map(|(s, _)| s.clone()).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

const FOLD_IN_SWEEPS: usize = 20;
const FOLD_IN_BURN_IN: usize = 10;
const FOLD_IN_SEED: u64 = 0x6c64_615f_666f_6c64;

/// Held-out perplexity `exp(−Σ log p(w) / N)`. Each held-out document's topic
/// mixture is estimated by a 20-sweep Gibbs fold-in against the model's
/// fixed topics, averaged over the last ten sweeps.
pub fn perplexity(model: &LdaModel, heldout: &DocTermMatrix) -> Result<f64, LdaError> {
    if heldout.n_terms() != model.v {
        return Err(LdaError::VocabMismatch { expected: model.v, got: heldout.n_terms() });
    }
    let n_tokens = heldout.total_tokens();
    if n_tokens == 0 {
        return Err(LdaError::EmptyHeldout);
    }
    let docs = expand_tokens(heldout);
    let log_lik: f64 = docs
        .par_iter()
        .enumerate()
        .map(|(d, words)| fold_in_log_likelihood(model, words, d as u64))
        .sum();
    Ok((-log_lik / n_tokens as f64).exp())
}

fn fold_in_log_likelihood(model: &LdaModel, words: &[usize], doc: u64) -> f64 {
    if words.is_empty() {
        return 0.0;
    }
    let k = model.k;
    let mut rng = rng_from_seed(crate::rng::derive_seed(FOLD_IN_SEED, doc));
    let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
    let mut n_k = vec![0u32; k];
    z.iter().for_each(|&t| n_k[t] += 1);
    let mut cum = vec![0.0; k];
    let mut theta = vec![0.0; k];
    let denom = words.len() as f64 + k as f64 * model.alpha;
    for sweep in 1..=FOLD_IN_SWEEPS {
        for (n, &w) in words.iter().enumerate() {
            n_k[z[n]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += (f64::from(n_k[t]) + model.alpha) * model.phi[t][w];
                cum[t] = total;
            }
            let u = rng.random::<f64>() * total;
            let new = cum.iter().position(|&c| u < c).unwrap_or(k - 1);
            z[n] = new;
            n_k[new] += 1;
        }
        if sweep > FOLD_IN_BURN_IN {
            for t in 0..k {
                theta[t] += (f64::from(n_k[t]) + model.alpha) / denom;
            }
        }
    }
    let samples = (FOLD_IN_SWEEPS - FOLD_IN_BURN_IN) as f64;
    theta.iter_mut().for_each(|x| *x /= samples);
    words
        .iter()
        .map(|&w| (0..k).map(|t| theta[t] * model.phi[t][w]).sum::<f64>().ln())
        .sum()
}

/// Dirichlet priors for `select_k`. A missing α means `50 / K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Priors {
    pub alpha: Option<f64>,
    pub eta: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Self { alpha: None, eta: 0.01 }
    }
}

impl Priors {
    pub fn alpha_for(&self, k: usize) -> f64 {
        self.alpha.unwrap_or(50.0 / k as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KSelection {
    pub best_k: usize,
    /// `(k, held-out perplexity)` in candidate order.
    pub perplexities: Vec<(usize, f64)>,
}

/// Split documents into train and held-out sets (shuffled under the config
/// seed, `split_frac` of them for training), fit one model per candidate and
/// keep the lowest held-out perplexity. Ties go to the smallest K.
pub fn select_k(
    matrix: &DocTermMatrix,
    candidates: &[usize],
    split_frac: f64,
    config: &GibbsConfig,
    priors: &Priors,
) -> Result<KSelection, LdaError> {
    if candidates.is_empty() {
        return Err(LdaError::NoCandidates);
    }
    if !(split_frac > 0.0 && split_frac < 1.0) {
        return Err(LdaError::InvalidConfig(format!("split_frac {split_frac} not in (0, 1)")));
    }
    config.validate()?;
    for &k in candidates {
        check_priors(k, priors.alpha_for(k), priors.eta)?;
    }
    let m = matrix.n_docs();
    let n_train = ((m as f64) * split_frac).round() as usize;
    let n_heldout = m - n_train.min(m);
    if n_train < 2 || n_heldout < 2 {
        return Err(LdaError::InsufficientDocuments { train: n_train.min(m), heldout: n_heldout });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng_from_seed(derive_named(config.seed, "select-k split")));
    let (train_idx, heldout_idx) = order.split_at(n_train);
    let mut train_idx = train_idx.to_vec();
    let mut heldout_idx = heldout_idx.to_vec();
    train_idx.sort_unstable();
    heldout_idx.sort_unstable();
    let train = matrix.subset(&train_idx);
    let heldout = matrix.subset(&heldout_idx);

    let perplexities = candidates
        .par_iter()
        .map(|&k| {
            let model = fit_gibbs(&train, k, priors.alpha_for(k), priors.eta, config)?;
            Ok((k, perplexity(&model, &heldout)?))
        })
        .collect::<Result<Vec<_>, LdaError>>()?;
    let best_k = perplexities
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|p| p.0)
        .expect("non-empty");
    Ok(KSelection { best_k, perplexities })
}

/// Parameters of the forward generative simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub m: usize,
    pub xi: f64,
    pub k: usize,
    pub v: usize,
    pub alpha: f64,
    pub topic_word_dists: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), LdaError> {
        let bad = |m: String| Err(LdaError::InvalidSpec(m));
        if self.k == 0 || self.v == 0 {
            return bad("K and V must be positive".into());
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return bad(format!("xi must be positive, got {}", self.xi));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.topic_word_dists.len() != self.k {
            return bad(format!("{} topic rows for K = {}", self.topic_word_dists.len(), self.k));
        }
        for (t, row) in self.topic_word_dists.iter().enumerate() {
            if row.len() != self.v {
                return bad(format!("topic {t} has {} entries for V = {}", row.len(), self.v));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return bad(format!("topic {t} has a negative or non-finite entry"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return bad(format!("topic {t} sums to {s}"));
            }
        }
        Ok(())
    }
}

/// A corpus drawn from the generative process, with its hidden variables.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    /// Documents whose text is their words, named `w0000`, `w0001`, …
    pub corpus: Corpus,
    /// Counts over the full V-term index.
    pub matrix: DocTermMatrix,
    /// Word ids in generation order.
    pub tokens: Vec<Vec<usize>>,
    /// Topic of each token, aligned with `tokens`.
    pub assignments: Vec<Vec<usize>>,
    pub thetas: Vec<Vec<f64>>,
}

pub fn synthetic_term(v: usize) -> String {
    format!("w{v:04}")
}

/// Draw `N ~ Poisson(ξ)` (redrawn while 0) and `θ ~ Dir(α)` per document,
/// then for each token a topic from `θ` and a word from that topic's row.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<SyntheticCorpus, LdaError> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let poisson = Poisson::new(spec.xi).map_err(|e| LdaError::InvalidSpec(e.to_string()))?;
    let gamma = Gamma::new(spec.alpha, 1.0).map_err(|e| LdaError::InvalidSpec(e.to_string()))?;
    let cumulative: Vec<Vec<f64>> = spec
        .topic_word_dists
        .iter()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let draw = |cum: &[f64], rng: &mut Rng| {
        let u = rng.random::<f64>() * cum[cum.len() - 1];
        cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
    };

    let mut tokens = Vec::with_capacity(spec.m);
    let mut assignments = Vec::with_capacity(spec.m);
    let mut thetas = Vec::with_capacity(spec.m);
    let mut documents = Vec::with_capacity(spec.m);
    for d in 0..spec.m {
        let n = loop {
            let n = poisson.sample(&mut rng) as usize;
            if n > 0 {
                break n;
            }
        };
        let mut theta: Vec<f64> = (0..spec.k).map(|_| gamma.sample(&mut rng)).collect();
        let s: f64 = theta.iter().sum();
        if s > 0.0 {
            theta.iter_mut().for_each(|x| *x /= s);
        } else {
            let hot = rng.random_range(0..spec.k);
            theta = (0..spec.k).map(|t| if t == hot { 1.0 } else { 0.0 }).collect();
        }
        let theta_cum: Vec<f64> = theta
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let mut words = Vec::with_capacity(n);
        let mut zs = Vec::with_capacity(n);
        for _ in 0..n {
            let z = draw(&theta_cum, &mut rng);
            words.push(draw(&cumulative[z], &mut rng));
            zs.push(z);
        }
        let text: Vec<String> = words.iter().map(|&w| synthetic_term(w)).collect();
        documents.push(Document::new(format!("syn{d:06}"), text.join(" "), None, Source::Synthetic));
        tokens.push(words);
        assignments.push(zs);
        thetas.push(theta);
    }
    let matrix = DocTermMatrix::from_token_ids(spec.v, &tokens).expect("word ids below V");
    Ok(SyntheticCorpus { corpus: Corpus::new(documents)?, matrix, tokens, assignments, thetas })
}

/// Total-variation distance between two distributions over the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Match estimated topics to reference topics minimizing the mean
/// total-variation distance. Returns `perm` with `estimated[perm[i]]` paired
/// to `reference[i]`, and that mean. Exhaustive up to 8 topics, greedy above.
pub fn match_topics(estimated: &[Vec<f64>], reference: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let k = reference.len();
    assert_eq!(estimated.len(), k, "topic counts differ");
    let dist: Vec<Vec<f64>> = reference
        .iter()
        .map(|r| estimated.iter().map(|e| total_variation(e, r)).collect())
        .collect();
    let cost = |perm: &[usize]| perm.iter().enumerate().map(|(i, &j)| dist[i][j]).sum::<f64>() / k as f64;
    if k <= 8 {
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = (perm.clone(), cost(&perm));
        while next_permutation(&mut perm) {
            let c = cost(&perm);
            if c < best.1 {
                best = (perm.clone(), c);
            }
        }
        best
    } else {
        let mut used = vec![false; k];
        let perm: Vec<usize> = (0..k)
            .map(|i| {
                let j = (0..k)
                    .filter(|&j| !used[j])
                    .min_by(|&a, &b| dist[i][a].total_cmp(&dist[i][b]))
                    .expect("a free topic remains");
                used[j] = true;
                j
            })
            .collect();
        let c = cost(&perm);
        (perm, c)
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// `K` topics over `V` words where topic `t` puts `1 − leak` of its mass
/// uniformly on its own block of `V / K` words and spreads `leak` over the
/// rest.
pub fn block_topics(k: usize, v: usize, leak: f64) -> Vec<Vec<f64>> {
    let block = v / k;
    (0..k)
        .map(|t| {
            let own = t * block..(t + 1) * block;
            let others = v - block;
            (0..v)
                .map(|w| {
                    if own.contains(&w) {
                        (1.0 - leak) / block as f64
                    } else if others > 0 {
                        leak / others as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}
