//! SPMF-style rule files (`a1 a2 ==> c1 #SUP: s #CONF: x`) and
//! whitespace-separated transaction files.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{ItemId, ItemSet, LoadReport, RuleDatabase, RuleDraft, RuleError, Weight};

/// Default multiplier turning decimal confidences into integer weights.
pub const DEFAULT_CONF_SCALE: u64 = 10_000;

#[derive(Debug, Error)]
pub enum SpmfError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn perr(line: usize, msg: impl Into<String>) -> SpmfError {
    SpmfError::Parse { line, msg: msg.into() }
}

/// Quantizes a non-negative decimal string to `round(x·scale)` exactly,
/// rounding half up.
pub fn quantize_decimal(text: &str, scale: u64) -> Option<u64> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let int: u128 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let digits = frac_part.len().min(30) as u32;
    let frac: u128 = if digits == 0 { 0 } else { frac_part[..digits as usize].parse().ok()? };
    let denom = 10u128.checked_pow(digits)?;
    let scale = u128::from(scale);
    let scaled = int.checked_mul(scale)?.checked_mul(denom)?.checked_add(frac.checked_mul(scale)?)?;
    let q = (scaled + denom / 2) / denom;
    u64::try_from(q).ok()
}

fn parse_items(text: &str, line: usize) -> Result<Vec<ItemId>, SpmfError> {
    text.split_whitespace()
        .map(|tok| tok.parse::<ItemId>().map_err(|_| perr(line, format!("bad item `{tok}`"))))
        .collect()
}

/// Parses one rule line.
pub fn parse_rule_line(text: &str, line: usize, conf_scale: u64) -> Result<RuleDraft, SpmfError> {
    let (lhs, rest) = text.split_once("==>").ok_or_else(|| perr(line, "missing `==>`"))?;
    let (rhs, tags) = match rest.find('#') {
        Some(at) => (&rest[..at], &rest[at..]),
        None => (rest, ""),
    };
    let antecedent = parse_items(lhs, line)?;
    let consequent = parse_items(rhs, line)?;
    if antecedent.is_empty() {
        return Err(perr(line, "empty antecedent"));
    }
    let mut weight: Option<Weight> = None;
    let mut toks = tags.split_whitespace();
    while let Some(tag) = toks.next() {
        if !tag.starts_with('#') {
            return Err(perr(line, format!("unexpected token `{tag}`")));
        }
        let value = toks.next().ok_or_else(|| perr(line, format!("{tag} without value")))?;
        if tag == "#CONF:" {
            weight = Some(quantize_decimal(value, conf_scale).ok_or_else(|| perr(line, format!("bad confidence `{value}`")))?);
        } else if tag == "#SUP:" && value.parse::<f64>().is_err() {
            return Err(perr(line, format!("bad support `{value}`")));
        }
    }
    let weight = weight.ok_or_else(|| perr(line, "missing #CONF"))?;
    Ok(RuleDraft { antecedent: ItemSet::new(antecedent), consequent: ItemSet::new(consequent), weight })
}

/// Parses rule lines, skipping blanks and `%`/`//` comments.
pub fn parse_rules<R: BufRead>(reader: R, conf_scale: u64) -> Result<Vec<RuleDraft>, SpmfError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with("//") {
            continue;
        }
        out.push(parse_rule_line(trimmed, i + 1, conf_scale)?);
    }
    Ok(out)
}

/// Parses and loads a rule file. The universe is the largest item id seen
/// unless given explicitly.
pub fn load_rules<R: BufRead>(
    reader: R,
    conf_scale: u64,
    universe: Option<u32>,
) -> Result<(RuleDatabase, LoadReport), SpmfError> {
    let drafts = parse_rules(reader, conf_scale)?;
    let seen = drafts
        .iter()
        .flat_map(|d| d.antecedent.max_item().into_iter().chain(d.consequent.max_item()))
        .max()
        .unwrap_or(0);
    let universe = universe.unwrap_or(seen).max(1);
    Ok(RuleDatabase::from_drafts(universe, drafts)?)
}

/// Writes rules back in the same format; weights become `w/scale` decimals.
pub fn write_rules<W: Write>(db: &RuleDatabase, mut out: W, conf_scale: u64) -> io::Result<()> {
    let frac_digits = conf_scale.max(1).ilog10() as usize;
    for r in db.rules() {
        let join = |s: &ItemSet| s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        let int = r.weight / conf_scale.max(1);
        let frac = r.weight % conf_scale.max(1);
        if frac_digits == 0 {
            writeln!(out, "{} ==> {} #SUP: 1 #CONF: {}", join(&r.antecedent), join(&r.consequent), int)?;
        } else {
            writeln!(
                out,
                "{} ==> {} #SUP: 1 #CONF: {}.{:0width$}",
                join(&r.antecedent),
                join(&r.consequent),
                int,
                frac,
                width = frac_digits
            )?;
        }
    }
    Ok(())
}

/// One transaction per line, space-separated item ids. Blank lines are skipped.
pub fn parse_transactions<R: BufRead>(reader: R) -> Result<Vec<ItemSet>, SpmfError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let items = parse_items(&line, i + 1)?;
        if items.contains(&0) {
            return Err(perr(i + 1, "item 0 is reserved"));
        }
        out.push(ItemSet::new(items));
    }
    Ok(out)
}
