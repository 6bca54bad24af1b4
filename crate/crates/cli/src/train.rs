//! `train-svm`, `train-forest` and `classify`.

use std::io::BufRead;
use std::path::Path;

use trollkit::eval::{classify_accounts, confusion_matrix, stratified_sample, write_accuracy_csv};
use trollkit::forest::{default_mtry, train_forest, ForestConfig, ForestModel};
use trollkit::rng::derive_named;
use trollkit::svm::{train_ovr_for, Kernel, SvmModel, TrainConfig};
use trollkit::textprep::{vectorize, FeatureSpace, Pipeline, Vocabulary, Weighting};
use trollkit::{AccountCategory, Corpus, SparseVector};

use crate::config::Resolved;
use crate::error::CliError;
use crate::shared::{build_vocab, create, finish, load_corpus, open, pipeline, prepare_out, write_with};

/// Training and test features plus everything needed to write them out.
struct Prepared {
    out: std::path::PathBuf,
    classes: Vec<AccountCategory>,
    vocab: Vocabulary,
    feature_space: FeatureSpace,
    train_rows: Vec<SparseVector>,
    train_labels: Vec<AccountCategory>,
    test: Corpus,
    test_rows: Vec<SparseVector>,
    test_labels: Vec<AccountCategory>,
}

fn parse_categories(list: &str) -> Result<Vec<AccountCategory>, CliError> {
    let mut out: Vec<AccountCategory> = list
        .split(',')
        .map(|s| s.trim().parse().map_err(|e: trollkit::corpus::CorpusError| CliError::Usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Load the corpus, split it, and vectorize both halves against a
/// vocabulary built from the training half only.
fn prepare(cfg: &mut Resolved) -> Result<Prepared, CliError> {
    let corpus = load_corpus(cfg)?;
    let seed: u64 = cfg.get_req("seed")?;
    let weighting: Weighting = cfg.get_req("weighting")?;
    let classes = match cfg.raw("categories") {
        Some(list) => parse_categories(list)?,
        None => {
            let mut c: Vec<AccountCategory> = corpus.iter().filter_map(|d| d.label).collect();
            c.sort_unstable();
            c.dedup();
            c
        }
    };
    let labeled = corpus.filter(|d| d.label.is_some_and(|l| classes.contains(&l)));
    if labeled.is_empty() {
        return Err(CliError::Input("no labeled documents in the selected categories".into()));
    }
    let labels: Vec<AccountCategory> = labeled.iter().map(|d| d.label.expect("filtered")).collect();

    let train_size = match cfg.get::<usize>("train_size")? {
        Some(n) => n,
        None => ((labels.len() as f64) * 0.8).round().max(1.0) as usize,
    };
    cfg.pin("train_size", train_size);
    let split = stratified_sample(&labels, &classes, train_size, derive_named(seed, "train split"))?;
    let test_idx = match cfg.get::<usize>("test_size")? {
        Some(n) => {
            let rest: Vec<AccountCategory> = split.remainder.iter().map(|&i| labels[i]).collect();
            let present: Vec<AccountCategory> = classes.iter().copied().filter(|c| rest.contains(c)).collect();
            let s = stratified_sample(&rest, &present, n, derive_named(seed, "test split"))?;
            s.sample.iter().map(|&i| split.remainder[i]).collect()
        }
        None => split.remainder.clone(),
    };

    let train = labeled.subset(&split.sample);
    let test = labeled.subset(&test_idx);
    let pipeline = pipeline(cfg)?;
    let analyzed = pipeline.analyze_corpus(&train);
    let vocab = build_vocab(cfg, &analyzed)?;
    let feature_space = FeatureSpace::new(&vocab, weighting, &pipeline);
    let train_rows = weighting.apply(&vectorize(&analyzed, &vocab), &vocab);
    let test_rows = weighting.apply(&vectorize(&pipeline.analyze_corpus(&test), &vocab), &vocab);
    let out = prepare_out(cfg)?;
    Ok(Prepared {
        out,
        classes,
        vocab,
        feature_space,
        train_labels: split.sample.iter().map(|&i| labels[i]).collect(),
        test_labels: test_idx.iter().map(|&i| labels[i]).collect(),
        train_rows,
        test,
        test_rows,
    })
}

/// Write the vocabulary, test predictions, truth table and accuracy report.
fn evaluate(p: &Prepared, predicted: &[AccountCategory]) -> Result<(), CliError> {
    write_with(&p.out.join("vocab.txt"), |w| Ok(p.vocab.write(w)?))?;
    write_with(&p.out.join("predictions.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["doc_id", "truth", "predicted"])?;
        for ((d, t), pr) in p.test.iter().zip(&p.test_labels).zip(predicted) {
            w.write_record([d.doc_id.as_str(), t.as_str(), pr.as_str()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let pairs: Vec<(AccountCategory, AccountCategory)> =
        predicted.iter().copied().zip(p.test_labels.iter().copied()).collect();
    let matrix = confusion_matrix(&p.classes, &pairs)?;
    matrix.write_csv(create(&p.out.join("confusion.csv"))?)?;
    write_accuracy_csv(&matrix, create(&p.out.join("accuracy.csv"))?)?;
    Ok(())
}

fn kernel(cfg: &mut Resolved, n_features: usize) -> Result<Kernel, CliError> {
    let gamma = match cfg.get::<f64>("gamma")? {
        Some(g) => g,
        None => 1.0 / n_features.max(1) as f64,
    };
    let k = match cfg.require("kernel")? {
        "linear" => Kernel::Linear,
        "radial" => {
            cfg.pin("gamma", format!("{gamma:?}"));
            Kernel::Radial { gamma }
        }
        "polynomial" => {
            cfg.pin("gamma", format!("{gamma:?}"));
            Kernel::Polynomial { degree: cfg.get_req("degree")?, gamma, coef0: cfg.get_req("coef0")? }
        }
        other => return Err(CliError::Usage(format!("unknown kernel `{other}` (linear, radial, polynomial)"))),
    };
    k.validate()?;
    Ok(k)
}

pub fn svm(cfg: &mut Resolved) -> Result<(), CliError> {
    let p = prepare(cfg)?;
    let kernel = kernel(cfg, p.vocab.len())?;
    let config = TrainConfig {
        c: cfg.get_req("c")?,
        epochs: cfg.get_req("epochs")?,
        tolerance: cfg.get_req("tolerance")?,
        seed: derive_named(cfg.get_req("seed")?, "svm"),
    };
    let model = train_ovr_for(&p.classes, &p.train_rows, &p.train_labels, kernel, p.feature_space, &config)?;
    write_with(&p.out.join("svm.model"), |w| Ok(model.write(w)?))?;
    let predicted = p
        .test_rows
        .iter()
        .map(|x| model.predict(x).map(|r| r.0))
        .collect::<Result<Vec<_>, _>>()?;
    evaluate(&p, &predicted)?;
    finish(cfg, &p.out)
}

pub fn forest(cfg: &mut Resolved) -> Result<(), CliError> {
    let p = prepare(cfg)?;
    let mtry = match cfg.get::<usize>("mtry")? {
        Some(m) => m,
        None => default_mtry(p.vocab.len()),
    };
    cfg.pin("mtry", mtry);
    let config = ForestConfig {
        n_trees: cfg.get_req("n_trees")?,
        mtry: Some(mtry),
        max_depth: cfg.get("max_depth")?,
        min_leaf: cfg.get_req("min_leaf")?,
        impurity: cfg.get_req("impurity")?,
        seed: derive_named(cfg.get_req("seed")?, "forest"),
        bootstrap: cfg.get_req("bootstrap")?,
    };
    let model = train_forest(&p.train_rows, &p.train_labels, p.feature_space, &config)?;
    write_with(&p.out.join("forest.model"), |w| Ok(model.write(w)?))?;
    let predicted = p
        .test_rows
        .iter()
        .map(|x| model.predict(x).map(|r| r.0))
        .collect::<Result<Vec<_>, _>>()?;
    evaluate(&p, &predicted)?;
    finish(cfg, &p.out)
}

enum Model {
    Svm(SvmModel),
    Forest(ForestModel),
}

impl Model {
    fn load(path: &Path) -> Result<Self, CliError> {
        let mut first = String::new();
        open(path)?.read_line(&mut first)?;
        match first.trim_end() {
            "trollkit-svm v1" => Ok(Model::Svm(SvmModel::read(open(path)?)?)),
            "trollkit-forest v1" => Ok(Model::Forest(ForestModel::read(open(path)?)?)),
            _ => Err(CliError::Input(format!("{} is not a trollkit model file", path.display()))),
        }
    }

    fn feature_space(&self) -> FeatureSpace {
        match self {
            Model::Svm(m) => m.feature_space(),
            Model::Forest(m) => m.feature_space,
        }
    }

    fn classes(&self) -> &[AccountCategory] {
        match self {
            Model::Svm(m) => m.classes(),
            Model::Forest(m) => &m.classes,
        }
    }

    fn predict(&self, x: &SparseVector) -> Result<AccountCategory, CliError> {
        Ok(match self {
            Model::Svm(m) => m.predict(x)?.0,
            Model::Forest(m) => m.predict(x)?.0,
        })
    }
}

/// The feature space the model was trained in must be the one this
/// vocabulary, weighting and stoplist produce.
fn check_feature_space(model: &Model, vocab: &Vocabulary, pipeline: &Pipeline) -> Result<(), CliError> {
    let expected = model.feature_space();
    let got = FeatureSpace::new(vocab, expected.weighting, pipeline);
    if got != expected {
        return Err(CliError::VocabMismatch(format!(
            "model expects `{}` but vocabulary and stoplist give `{}`",
            expected.header_line(),
            got.header_line()
        )));
    }
    Ok(())
}

pub fn classify(cfg: &mut Resolved) -> Result<(), CliError> {
    let model_path = cfg.path("model")?;
    let vocab_path = match cfg.raw("vocab") {
        Some(v) => v.into(),
        None => model_path.parent().unwrap_or(Path::new(".")).join("vocab.txt"),
    };
    cfg.pin("vocab", vocab_path.display());
    let model = Model::load(&model_path)?;
    let vocab = Vocabulary::read(open(&vocab_path)?)?;
    let pipeline = pipeline(cfg)?;
    check_feature_space(&model, &vocab, &pipeline)?;
    let corpus = load_corpus(cfg)?;
    if corpus.is_empty() {
        return Err(CliError::Input("corpus has no documents to classify".into()));
    }
    let weighting = model.feature_space().weighting;
    let rows = weighting.apply(&vectorize(&pipeline.analyze_corpus(&corpus), &vocab), &vocab);
    let predicted = rows.iter().map(|x| model.predict(x)).collect::<Result<Vec<_>, _>>()?;

    let out = prepare_out(cfg)?;
    let accounts: Vec<String> = corpus.iter().map(|d| d.account.clone().unwrap_or_else(|| d.doc_id.clone())).collect();
    write_with(&out.join("predictions.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["doc_id", "account", "predicted"])?;
        for ((d, a), p) in corpus.iter().zip(&accounts).zip(&predicted) {
            w.write_record([d.doc_id.as_str(), a.as_str(), p.as_str()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let pairs: Vec<(String, AccountCategory)> = accounts.into_iter().zip(predicted).collect();
    let report = classify_accounts(&pairs)?;
    report.write_verdicts_csv(create(&out.join("verdicts.csv"))?, model.classes())?;
    report.write_histogram_csv(create(&out.join("verdict_histogram.csv"))?)?;
    finish(cfg, &out)
}

