//! Instance loading: lineage text files or a (database, query) pair.
//!
//! An instance is one positive DNF function with display names for its
//! variables. Database mode produces one instance per output tuple.

use std::fs;
use std::path::{Path, PathBuf};

use banzhaf::lineage::{parse_dnf, DnfFunction, VarTable};
use banzhaf::queryengine::{evaluate, lineage, load_database, parse_query};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct Instance {
    pub label: String,
    pub function: DnfFunction,
    pub vars: VarTable,
}

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: no instances found")]
    Empty { path: PathBuf },
    #[error("pass either --lineage or --db with --query")]
    NoInput,
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Parses a lineage text file: one instance per non-empty, non-`#` line,
/// each optionally prefixed with `id<TAB>`.
fn parse_lineage_file(path: &Path) -> Result<Vec<Instance>, InputError> {
    let text = read(path)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("instance")
        .to_string();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = parse_dnf(line).map_err(|e| InputError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        let label = parsed
            .id
            .clone()
            .unwrap_or_else(|| format!("{stem}:{}", idx + 1));
        out.push(Instance {
            label,
            function: parsed.function,
            vars: parsed.vars,
        });
    }
    if out.is_empty() {
        return Err(InputError::Empty {
            path: path.to_path_buf(),
        });
    }
    // A single anonymous instance keeps the bare file stem as its label.
    if out.len() == 1 && out[0].label == format!("{stem}:1") {
        out[0].label = stem;
    }
    Ok(out)
}

/// All `.dnf` files of a directory, in file-name order.
fn parse_lineage_dir(dir: &Path) -> Result<Vec<Instance>, InputError> {
    let entries = fs::read_dir(dir).map_err(|e| InputError::Read {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "dnf"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for file in &files {
        out.extend(parse_lineage_file(file)?);
    }
    if out.is_empty() {
        return Err(InputError::Empty {
            path: dir.to_path_buf(),
        });
    }
    Ok(out)
}

pub fn load_lineage_path(path: &Path) -> Result<Vec<Instance>, InputError> {
    if path.is_dir() {
        parse_lineage_dir(path)
    } else {
        parse_lineage_file(path)
    }
}

/// Loads `dir/schema.json` plus its CSVs, evaluates the query, and builds one
/// instance per output tuple. A false Boolean query yields zero instances.
pub fn load_db_instances(dir: &Path, query_path: &Path) -> Result<Vec<Instance>, InputError> {
    let schema = dir.join("schema.json");
    let db = load_database(&schema, dir).map_err(|e| InputError::Read {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let text = read(query_path)?;
    let q = parse_query(&text).map_err(|e| InputError::Parse {
        path: query_path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    let answers = evaluate(&q, &db).map_err(|e| InputError::Read {
        path: query_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for t in &answers {
        let function = lineage(&q, &db, t).map_err(|e| InputError::Read {
            path: query_path.to_path_buf(),
            message: e.to_string(),
        })?;
        out.push(Instance {
            label: format!("({})", t.join(",")),
            function,
            vars: db.var_names().clone(),
        });
    }
    Ok(out)
}

pub fn load(
    lineage_path: &Option<PathBuf>,
    db: &Option<PathBuf>,
    query: &Option<PathBuf>,
) -> Result<Vec<Instance>, InputError> {
    match (lineage_path, db, query) {
        (Some(path), None, None) => load_lineage_path(path),
        (None, Some(dir), Some(q)) => load_db_instances(dir, q),
        _ => Err(InputError::NoInput),
    }
}
