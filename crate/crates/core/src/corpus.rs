//! Instance corpora: a directory of instance files plus a manifest with one
//! `<file> m=<m> n=<n> alpha=<a> beta=<b> rho=<r> seed=<s>` line each.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::csp::ConstraintNetwork;
use crate::format::{load_instance, save_instance, ParseError};
use crate::rbgen::{generate, RbError, RbParams};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const INSTANCE_EXT: &str = "csp";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Generator(#[from] RbError),
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("corpus and manifest disagree: {0}")]
    Mismatch(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub file: String,
    pub params: RbParams,
}

impl CorpusEntry {
    pub fn manifest_line(&self) -> String {
        let p = &self.params;
        format!(
            "{} m={} n={} alpha={} beta={} rho={} seed={}",
            self.file, p.m, p.n, p.alpha, p.beta, p.rho, p.seed
        )
    }

    fn parse(line_no: usize, line: &str) -> Result<Self, CorpusError> {
        let bad = |msg: String| CorpusError::Manifest { line: line_no, msg };
        let mut fields = line.split_whitespace();
        let file = fields.next().ok_or_else(|| bad("empty line".into()))?.to_string();
        let mut get = |key: &str| -> Result<String, CorpusError> {
            let f = fields.next().ok_or_else(|| bad(format!("missing {key}")))?;
            f.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| bad(format!("expected {key}=..., got `{f}`")))
        };
        let num_err = |k: &str, v: &str| bad(format!("bad {k} `{v}`"));
        let (m, n, alpha, beta, rho, seed) =
            (get("m")?, get("n")?, get("alpha")?, get("beta")?, get("rho")?, get("seed")?);
        Ok(Self {
            file,
            params: RbParams {
                m: m.parse().map_err(|_| num_err("m", &m))?,
                n: n.parse().map_err(|_| num_err("n", &n))?,
                alpha: alpha.parse().map_err(|_| num_err("alpha", &alpha))?,
                beta: beta.parse().map_err(|_| num_err("beta", &beta))?,
                rho: rho.parse().map_err(|_| num_err("rho", &rho))?,
                seed: seed.parse().map_err(|_| num_err("seed", &seed))?,
            },
        })
    }
}

/// Per-instance generator seeds derived from one master seed.
pub fn instance_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Generates `count` instances of one class in memory, with seeds from
/// [`instance_seeds`].
pub fn sample_instances(class: RbParams, count: usize, master: u64) -> Result<Vec<ConstraintNetwork>, RbError> {
    instance_seeds(master, count)
        .into_iter()
        .map(|s| generate(&class.with_seed(s)))
        .collect()
}

pub fn instance_file_name(index: usize) -> String {
    format!("inst-{index:05}.{INSTANCE_EXT}")
}

/// Writes `count` instances and the manifest into `dir`.
pub fn write_corpus(dir: &Path, class: RbParams, count: usize, master: u64) -> Result<Vec<CorpusEntry>, CorpusError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut entries = Vec::with_capacity(count);
    let mut manifest = String::new();
    for (i, seed) in instance_seeds(master, count).into_iter().enumerate() {
        let params = class.with_seed(seed);
        let mut net = generate(&params)?;
        let file = instance_file_name(i);
        net.set_id(file.trim_end_matches(&format!(".{INSTANCE_EXT}")));
        let path = dir.join(&file);
        save_instance(&net, &path).map_err(io_err(&path))?;
        let entry = CorpusEntry { file, params };
        manifest.push_str(&entry.manifest_line());
        manifest.push('\n');
        entries.push(entry);
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(io_err(&path))?;
    Ok(entries)
}

pub fn read_manifest(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| CorpusEntry::parse(i + 1, l))
        .collect()
}

/// Loads every instance listed in the manifest. Fails when a listed file
/// is missing or when the directory holds instance files the manifest
/// does not list.
pub fn load_corpus(dir: &Path) -> Result<Vec<(CorpusEntry, ConstraintNetwork)>, CorpusError> {
    let entries = read_manifest(dir)?;
    let mut on_disk = Vec::new();
    for item in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = item.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == INSTANCE_EXT) {
            on_disk.push(path.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    on_disk.sort();
    let mut listed: Vec<String> = entries.iter().map(|e| e.file.clone()).collect();
    listed.sort();
    if let Some(extra) = on_disk.iter().find(|f| listed.binary_search(f).is_err()) {
        return Err(CorpusError::Mismatch(format!("{extra} is not in the manifest")));
    }
    let mut out = Vec::with_capacity(entries.len());
    for entry in entries {
        let path = dir.join(&entry.file);
        if !path.exists() {
            return Err(CorpusError::Mismatch(format!("{} is listed but missing", entry.file)));
        }
        let net = load_instance(&path).map_err(|source| CorpusError::Parse { path: path.clone(), source })?;
        out.push((entry, net));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbgen::Preset;

    #[test]
    fn manifest_line_round_trip() {
        let e = CorpusEntry { file: "inst-00003.csp".into(), params: Preset::D2.params(10).with_seed(77) };
        assert_eq!(CorpusEntry::parse(1, &e.manifest_line()).unwrap(), e);
        assert!(CorpusEntry::parse(1, "x m=2 n=3").is_err());
    }

    #[test]
    fn seeds_are_deterministic() {
        assert_eq!(instance_seeds(5, 4), instance_seeds(5, 4));
        assert_ne!(instance_seeds(5, 4), instance_seeds(6, 4));
    }
}
