//! `trollkit`: ingest tweets and ads, train and apply classifiers, and fit
//! topic models, with every run reproducible from its `config.resolved`.

mod config;
mod error;
mod ingest;
mod shared;
mod topics;
mod train;

use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use config::Resolved;
use error::CliError;

fn opt(id: &'static str, help: &'static str) -> Arg {
    Arg::new(id).long(id.replace('_', "-")).value_name(id.to_uppercase()).help(help)
}

fn common(cmd: Command) -> Command {
    cmd.arg(opt("config", "key=value settings file; flags override it"))
        .arg(opt("out", "output directory"))
}

fn text_options(cmd: Command) -> Command {
    cmd.arg(opt("stoplist", "stopword file, one word per line, or `builtin`"))
        .arg(opt("min_df", "drop terms in fewer documents than this"))
        .arg(opt("max_df_frac", "drop terms in more than this fraction of documents"))
}

fn split_options(cmd: Command) -> Command {
    cmd.arg(opt("corpus", "labeled corpus CSV from ingest-*"))
        .arg(opt("seed", "top-level random seed"))
        .arg(opt("train_size", "stratified training sample size (default 80%)"))
        .arg(opt("test_size", "stratified test sample size from the rest (default all)"))
        .arg(opt("categories", "comma-separated categories to train on (default all labels)"))
        .arg(opt("weighting", "tfidf or counts"))
}

fn gibbs_options(cmd: Command) -> Command {
    cmd.arg(opt("corpus", "corpus CSV"))
        .arg(opt("seed", "random seed"))
        .arg(opt("alpha", "document-topic prior (default 50/k)"))
        .arg(opt("eta", "topic-word prior"))
        .arg(opt("iterations", "Gibbs sweeps"))
        .arg(opt("burn_in", "sweeps discarded before averaging"))
        .arg(opt("sample_lag", "sweeps between averaged samples"))
}

pub fn cli() -> Command {
    Command::new("trollkit")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Text classification and topic modeling for troll-account corpora")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            common(Command::new("ingest-tweets").about("Parse a tweet CSV into a corpus"))
                .arg(opt("input", "tweet CSV file"))
                .arg(opt("grouping", "message (one document per tweet) or account"))
                .arg(Arg::new("strict").long("strict").action(ArgAction::SetTrue).help("fail on the first malformed row"))
                .arg(opt("handle_column", "column holding the account handle"))
                .arg(opt("content_column", "column holding the tweet text"))
                .arg(opt("date_column", "column holding the publish date"))
                .arg(opt("category_column", "column holding the account category"))
                .arg(opt("followers_column", "optional follower-count column"))
                .arg(opt("retweet_column", "optional retweet-flag column")),
        )
        .subcommand(
            common(Command::new("ingest-ads").about("Parse ad text files into a corpus"))
                .arg(opt("input", "directory of ad files, or a single ad file"))
                .arg(opt("grouping", "message (one document per ad) or account"))
                .arg(Arg::new("strict").long("strict").action(ArgAction::SetTrue).help("fail on the first malformed ad")),
        )
        .subcommand(
            text_options(common(Command::new("report").about("Term frequencies and corpus summary")))
                .arg(opt("corpus", "corpus CSV"))
                .arg(opt("k", "number of terms to list"))
                .arg(opt("category", "restrict term counts to one category")),
        )
        .subcommand(
            text_options(split_options(common(Command::new("train-svm").about("Train and evaluate a one-vs-rest SVM"))))
                .arg(opt("kernel", "linear, radial or polynomial"))
                .arg(opt("gamma", "kernel gamma (default 1/V)"))
                .arg(opt("degree", "polynomial degree"))
                .arg(opt("coef0", "polynomial offset"))
                .arg(opt("c", "soft-margin trade-off"))
                .arg(opt("epochs", "training passes"))
                .arg(opt("tolerance", "stopping threshold")),
        )
        .subcommand(
            text_options(split_options(common(Command::new("train-forest").about("Train and evaluate a random forest"))))
                .arg(opt("n_trees", "number of trees"))
                .arg(opt("mtry", "features tried per split (default ceil(sqrt V))"))
                .arg(opt("max_depth", "depth limit (default none)"))
                .arg(opt("min_leaf", "smallest allowed leaf"))
                .arg(opt("impurity", "gini or entropy"))
                .arg(opt("bootstrap", "true to resample rows per tree")),
        )
        .subcommand(
            common(Command::new("classify").about("Apply a trained model and tally per-account verdicts"))
                .arg(opt("model", "model file from train-svm or train-forest"))
                .arg(opt("vocab", "vocabulary file (default: vocab.txt beside the model)"))
                .arg(opt("corpus", "corpus CSV to classify"))
                .arg(opt("stoplist", "stopword file used at training time, or `builtin`")),
        )
        .subcommand(
            text_options(gibbs_options(common(Command::new("lda-fit").about("Fit a topic model and list top words"))))
                .arg(opt("k", "number of topics"))
                .arg(opt("top_n", "words listed per topic")),
        )
        .subcommand(
            text_options(gibbs_options(common(Command::new("lda-select-k").about("Choose a topic count by held-out perplexity"))))
                .arg(opt("k_range", "candidates as `lo..hi` (inclusive) or a comma list"))
                .arg(opt("split_frac", "fraction of documents used for training")),
        )
}

const TEXT_DEFAULTS: [(&str, &str); 3] = [("stoplist", "builtin"), ("min_df", "1"), ("max_df_frac", "1")];
const GIBBS_DEFAULTS: [(&str, &str); 5] =
    [("seed", "0"), ("eta", "0.01"), ("iterations", "1000"), ("burn_in", "500"), ("sample_lag", "10")];

fn defaults(command: &str) -> Vec<(&'static str, &'static str)> {
    let mut d: Vec<(&str, &str)> = match command {
        "ingest-tweets" => vec![
            ("grouping", "message"),
            ("strict", "false"),
            ("handle_column", "author"),
            ("content_column", "content"),
            ("date_column", "publish_date"),
            ("category_column", "account_category"),
            ("followers_column", "followers"),
            ("retweet_column", "retweet"),
        ],
        "ingest-ads" => vec![("grouping", "message"), ("strict", "false")],
        "report" => vec![("k", "30")],
        "train-svm" => vec![
            ("seed", "0"),
            ("weighting", "tfidf"),
            ("kernel", "linear"),
            ("degree", "3"),
            ("coef0", "0"),
            ("c", "1"),
            ("epochs", "20"),
            ("tolerance", "0.001"),
        ],
        "train-forest" => vec![
            ("seed", "0"),
            ("weighting", "tfidf"),
            ("n_trees", "100"),
            ("min_leaf", "1"),
            ("impurity", "gini"),
            ("bootstrap", "true"),
        ],
        "classify" => vec![("stoplist", "builtin")],
        "lda-fit" => vec![("top_n", "30")],
        "lda-select-k" => vec![("split_frac", "0.8")],
        _ => Vec::new(),
    };
    if matches!(command, "report" | "train-svm" | "train-forest" | "lda-fit" | "lda-select-k") {
        d.extend(TEXT_DEFAULTS);
    }
    if command.starts_with("lda-") {
        d.extend(GIBBS_DEFAULTS);
    }
    d
}

fn run(name: &str, definition: &Command, matches: &ArgMatches) -> Result<(), CliError> {
    let mut cfg = Resolved::from_matches(name, definition, matches, &defaults(name))?;
    match name {
        "ingest-tweets" => ingest::tweets(&mut cfg),
        "ingest-ads" => ingest::ads(&mut cfg),
        "report" => ingest::report(&mut cfg),
        "train-svm" => train::svm(&mut cfg),
        "train-forest" => train::forest(&mut cfg),
        "classify" => train::classify(&mut cfg),
        "lda-fit" => topics::fit(&mut cfg),
        "lda-select-k" => topics::select(&mut cfg),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn main() -> ExitCode {
    let mut command = cli();
    let matches = match command.try_get_matches_from_mut(std::env::args_os()) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let Some((name, sub)) = matches.subcommand() else {
        return ExitCode::from(2);
    };
    let definition = command.find_subcommand(name).expect("parsed subcommand exists").clone();
    match run(name, &definition, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
