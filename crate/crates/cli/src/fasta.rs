//! Minimal FASTA reader.
//!
//! Records start at `>` header lines and run until the next header. Input with
//! no header at all is read as a single raw record named `stdin`. Whitespace
//! anywhere in sequence lines is dropped; `;` comment lines are skipped.

use std::io::BufRead;

use anyhow::{bail, Context, Result};
use usm::Alphabet;

/// Where a record came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    File(String),
    Stdin,
    Inline,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    /// First word of the header line, or `stdin` for headerless input.
    pub id: String,
    pub residues: Vec<char>,
    pub source: Source,
}

/// Reads every record from `reader`.
pub fn parse_fasta<R: BufRead>(reader: R, source: Source) -> Result<Vec<SequenceRecord>> {
    let mut records: Vec<SequenceRecord> = Vec::new();
    let mut raw: Option<SequenceRecord> = None;
    let mut saw_text = false;

    for (n, line) in reader.lines().enumerate() {
        let line = line.with_context(|| format!("reading line {}", n + 1))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        saw_text = true;
        if let Some(header) = line.strip_prefix('>') {
            if raw.is_some() {
                bail!("line {}: header after headerless sequence data", n + 1);
            }
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            records.push(SequenceRecord {
                id,
                residues: Vec::new(),
                source: source.clone(),
            });
            continue;
        }
        let target = match records.last_mut() {
            Some(r) => r,
            None => raw.get_or_insert_with(|| SequenceRecord {
                id: "stdin".to_string(),
                residues: Vec::new(),
                source: source.clone(),
            }),
        };
        target
            .residues
            .extend(line.chars().filter(|c| !c.is_whitespace()));
    }

    if !saw_text {
        bail!("empty input");
    }
    records.extend(raw);
    for r in &records {
        if r.residues.is_empty() {
            bail!("record {:?} has an empty sequence", r.id);
        }
    }
    Ok(records)
}

/// Case folding and unknown-symbol handling applied before encoding.
#[derive(Debug, Clone, Copy, Default)]
pub struct Normalize {
    pub uppercase: bool,
    /// Drop symbols outside the alphabet instead of failing.
    pub skip_unknown: bool,
}

/// Applies `norm` in place and returns how many symbols were dropped per record.
pub fn normalize(
    records: &mut [SequenceRecord],
    norm: Normalize,
    alphabet: Option<&Alphabet>,
) -> Result<Vec<usize>> {
    let mut dropped = Vec::with_capacity(records.len());
    for r in records.iter_mut() {
        if norm.uppercase {
            r.residues = r.residues.iter().flat_map(|c| c.to_uppercase()).collect();
        }
        let before = r.residues.len();
        if let (true, Some(abc)) = (norm.skip_unknown, alphabet) {
            r.residues.retain(|&c| abc.contains(c));
        }
        dropped.push(before - r.residues.len());
        if r.residues.is_empty() {
            bail!("record {:?} is empty after normalization", r.id);
        }
    }
    Ok(dropped)
}

/// Union of the symbols used by `records`.
pub fn union_alphabet(records: &[SequenceRecord]) -> Result<Alphabet> {
    Ok(Alphabet::infer(
        records.iter().flat_map(|r| r.residues.iter().copied()),
    )?)
}
