//! Helpers shared by the commands.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use trollkit::textprep::{parse_stoplist, Pipeline, Vocabulary};
use trollkit::Corpus;

use crate::config::Resolved;
use crate::error::CliError;

pub fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", path.display())))
}

/// Create the output directory and write the settings snapshot into it.
pub fn prepare_out(cfg: &Resolved) -> Result<PathBuf, CliError> {
    let out = cfg.path("out")?;
    fs::create_dir_all(&out).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", out.display())))?;
    Ok(out)
}

pub fn finish(cfg: &Resolved, out: &Path) -> Result<(), CliError> {
    cfg.write_snapshot(out)
}

pub fn load_corpus(cfg: &Resolved) -> Result<Corpus, CliError> {
    let path = cfg.path("corpus")?;
    Ok(Corpus::read_csv(open(&path)?)?)
}

pub fn pipeline(cfg: &Resolved) -> Result<Pipeline, CliError> {
    match cfg.require("stoplist")? {
        "builtin" => Ok(Pipeline::default()),
        path => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read stoplist {path}: {e}")))?;
            Ok(Pipeline::new(parse_stoplist(&text)))
        }
    }
}

pub fn build_vocab(cfg: &Resolved, analyzed: &[Vec<String>]) -> Result<Vocabulary, CliError> {
    let min_df: usize = cfg.get_req("min_df")?;
    let max_df_frac: f64 = cfg.get_req("max_df_frac")?;
    Ok(Vocabulary::build(analyzed, min_df, max_df_frac)?)
}

/// Two-column `metric,value` CSV.
pub fn write_metrics(path: &Path, rows: &[(String, String)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["metric", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
{
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
