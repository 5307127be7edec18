//! Flag grammars: `--values "TYPE:(j1,...,jd)=VALUE;..."` with 1-based
//! `TYPE`, and `--start i1,...,id`.

use std::collections::BTreeMap;

use branching_marks::{MarkKey, OffspringVector};

use crate::CliError;

pub fn parse_values(text: &str, d: usize) -> Result<BTreeMap<MarkKey, f64>, CliError> {
    let mut out = BTreeMap::new();
    for entry in text.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let bad = |why: &str| CliError::Parse(format!("--values entry {entry:?}: {why}"));
        let (ty, rest) = entry
            .split_once(':')
            .ok_or_else(|| bad("expected TYPE:(j)=VALUE"))?;
        let ty: usize = ty
            .trim()
            .parse()
            .map_err(|_| bad("TYPE must be a positive integer"))?;
        if ty == 0 || ty > d {
            return Err(CliError::Invalid(format!(
                "--values entry {entry:?}: TYPE must lie in 1..={d}"
            )));
        }
        let (j, value) = rest
            .split_once('=')
            .ok_or_else(|| bad("missing '=VALUE'"))?;
        let j = j
            .trim()
            .strip_prefix('(')
            .and_then(|j| j.strip_suffix(')'))
            .ok_or_else(|| bad("vector must be written (j1,...,jd)"))?;
        let counts = j
            .split(',')
            .map(|c| c.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("vector entries must be nonnegative integers"))?;
        if counts.len() != d {
            return Err(CliError::Invalid(format!(
                "--values entry {entry:?}: vector has {} entries, expected {d}",
                counts.len()
            )));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| bad("VALUE must be a number"))?;
        let key = MarkKey::new(ty - 1, OffspringVector::new(counts));
        if out.insert(key, value).is_some() {
            return Err(bad("assigned more than once"));
        }
    }
    Ok(out)
}

pub fn parse_start(text: &str, d: usize) -> Result<Vec<u64>, CliError> {
    let counts = text
        .split(',')
        .map(|c| c.trim().parse::<u64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Parse(format!("--start {text:?}: expected i1,...,id")))?;
    if counts.len() != d {
        return Err(CliError::Invalid(format!(
            "--start {text:?}: {} entries, expected {d}",
            counts.len()
        )));
    }
    Ok(counts)
}
