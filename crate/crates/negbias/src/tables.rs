//! CSV tables and JSON documents exchanged by the CLI.

use std::fs;
use std::path::Path;

use negbias_core::synthetic::WildTag;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

/// Formats like C's `%.9g`.
pub fn format_sig9(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 && x.is_sign_negative() {
            "-0".into()
        } else {
            format!("{x}")
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa.to_string()), exp.abs())
    }
}

fn trim_fraction(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(fs::File::create(path).map_err(io_err(path))?))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    Ok(csv::Reader::from_reader(fs::File::open(path).map_err(io_err(path))?))
}

/// `rank,corpus_index,rep_score` in decreasing representativeness.
pub fn write_order(path: &Path, order: &[usize], rep_scores: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["rank", "corpus_index", "rep_score"])?;
    for (rank, &i) in order.iter().enumerate() {
        w.write_record([rank.to_string(), i.to_string(), format_sig9(rep_scores[i])])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// `group_id,corpus_index`, groups in order, members in order.
pub fn write_groups(path: &Path, groups: &[Vec<usize>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["group_id", "corpus_index"])?;
    for (g, members) in groups.iter().enumerate() {
        for &i in members {
            w.write_record([g.to_string(), i.to_string()])?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Deserialize)]
struct GroupRow {
    group_id: usize,
    corpus_index: usize,
}

/// Reads `group_id,corpus_index`; group ids must be `0..B` with no gaps.
pub fn read_groups(path: &Path) -> Result<Vec<Vec<usize>>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for row in reader(path)?.deserialize() {
        let row: GroupRow = row?;
        if row.group_id >= groups.len() {
            groups.resize(row.group_id + 1, Vec::new());
        }
        groups[row.group_id].push(row.corpus_index);
    }
    if let Some(g) = groups.iter().position(Vec::is_empty) {
        return Err(Error::Table {
            path: path.to_owned(),
            message: format!("group {g} has no members"),
        });
    }
    Ok(groups)
}

/// `index,score` with 9 significant digits.
pub fn write_scores(path: &Path, scores: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["index", "score"])?;
    for (i, &s) in scores.iter().enumerate() {
        w.write_record([i.to_string(), format_sig9(s)])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Deserialize)]
struct ScoreRow {
    index: usize,
    score: f64,
}

/// Reads `index,score`, returning scores ordered by index.
pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let mut rows: Vec<ScoreRow> = reader(path)?.deserialize().collect::<std::result::Result<_, _>>()?;
    rows.sort_by_key(|r| r.index);
    if rows.iter().enumerate().any(|(i, r)| r.index != i) {
        return Err(Error::Table {
            path: path.to_owned(),
            message: "indices must be 0..n without gaps or repeats".into(),
        });
    }
    Ok(rows.into_iter().map(|r| r.score).collect())
}

#[derive(Serialize)]
struct TruthRow {
    row: usize,
    tag: WildTag,
}

pub fn write_wild_truth(path: &Path, tags: &[WildTag]) -> Result<()> {
    let mut w = writer(path)?;
    for (row, &tag) in tags.iter().enumerate() {
        w.serialize(TruthRow { row, tag })?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_matches_printf() {
        let cases = [
            (0.5, "0.5"),
            (1.0, "1"),
            (0.123456789012, "0.123456789"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5e-7, "-2.5e-07"),
            (0.999999999999, "1"),
            (9.9999999996e-5, "0.0001"),
            (1e100, "1e+100"),
            (0.0, "0"),
            (-3.25, "-3.25"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig9(x), want, "{x}");
        }
    }

    #[test]
    fn sig9_round_trips_to_nine_digits() {
        for x in [0.987654321987, 1.0 / 3.0, 2.0f64.sqrt() * 1e-9, 7.0e12 / 3.0] {
            let back: f64 = format_sig9(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 5e-9);
        }
    }
}
