//! `lda-fit` and `lda-select-k`.

use trollkit::lda::{fit_gibbs, select_k, topic_top_words, write_topics_csv, write_topics_wide_csv, GibbsConfig, Priors};
use trollkit::rng::derive_named;
use trollkit::textprep::{vectorize, DocTermMatrix, Vocabulary};

use crate::config::Resolved;
use crate::error::CliError;
use crate::shared::{build_vocab, create, finish, load_corpus, pipeline, prepare_out, write_with};

fn gibbs_config(cfg: &Resolved) -> Result<GibbsConfig, CliError> {
    let config = GibbsConfig {
        iterations: cfg.get_req("iterations")?,
        burn_in: cfg.get_req("burn_in")?,
        sample_lag: cfg.get_req("sample_lag")?,
        seed: derive_named(cfg.get_req("seed")?, "gibbs"),
    };
    config.validate()?;
    Ok(config)
}

fn count_matrix(cfg: &Resolved) -> Result<(Vocabulary, DocTermMatrix), CliError> {
    let corpus = load_corpus(cfg)?;
    if corpus.is_empty() {
        return Err(CliError::Input("corpus has no documents".into()));
    }
    let analyzed = pipeline(cfg)?.analyze_corpus(&corpus);
    let vocab = build_vocab(cfg, &analyzed)?;
    let matrix = vectorize(&analyzed, &vocab);
    Ok((vocab, matrix))
}

fn positive_k(k: usize) -> Result<usize, CliError> {
    if k == 0 {
        return Err(CliError::Usage("k must be at least 1".into()));
    }
    Ok(k)
}

pub fn fit(cfg: &mut Resolved) -> Result<(), CliError> {
    let k = positive_k(cfg.get_req("k")?)?;
    let alpha = cfg.get::<f64>("alpha")?.unwrap_or(50.0 / k as f64);
    cfg.pin("alpha", format!("{alpha:?}"));
    let eta: f64 = cfg.get_req("eta")?;
    let top_n: usize = cfg.get_req("top_n")?;
    let config = gibbs_config(cfg)?;
    let (vocab, matrix) = count_matrix(cfg)?;
    let mut model = fit_gibbs(&matrix, k, alpha, eta, &config)?;
    model.bind_vocabulary(&vocab);

    let out = prepare_out(cfg)?;
    let topics = topic_top_words(&model, &vocab, top_n);
    write_topics_csv(create(&out.join("topics.csv"))?, &topics)?;
    write_topics_wide_csv(create(&out.join("topics_wide.csv"))?, &topics)?;
    write_with(&out.join("vocab.txt"), |w| Ok(vocab.write(w)?))?;
    finish(cfg, &out)
}

/// `lo..hi` (inclusive) or `a,b,c`.
fn parse_k_range(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("bad k_range `{s}` (expected lo..hi or a comma list)"));
    let ks: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        (lo..=hi).collect()
    } else {
        s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if ks.is_empty() {
        return Err(bad());
    }
    ks.into_iter().map(positive_k).collect()
}

pub fn select(cfg: &mut Resolved) -> Result<(), CliError> {
    let candidates = parse_k_range(cfg.require("k_range")?)?;
    let split_frac: f64 = cfg.get_req("split_frac")?;
    let priors = Priors { alpha: cfg.get("alpha")?, eta: cfg.get_req("eta")? };
    let config = gibbs_config(cfg)?;
    let (_, matrix) = count_matrix(cfg)?;
    let selection = select_k(&matrix, &candidates, split_frac, &config, &priors)?;

    let out = prepare_out(cfg)?;
    write_with(&out.join("perplexity.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["k", "alpha", "perplexity", "selected"])?;
        for &(k, p) in &selection.perplexities {
            w.write_record([
                k.to_string(),
                format!("{:?}", priors.alpha_for(k)),
                format!("{p:.6}"),
                u8::from(k == selection.best_k).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    println!("best k = {}", selection.best_k);
    finish(cfg, &out)
}
