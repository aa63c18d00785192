//! Plain-text formats: `key = value` blocks and the CSV layouts shared with
//! the command-line harness. Reals are written with 17 significant digits
//! so that every `f64` round-trips exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Formats a real with 17 significant digits and `.` as decimal separator.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn parse_real(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a real number: `{s}`")))
}

/// Splits `key = value` lines, dropping blank lines and `#` comments.
pub fn kv_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
        }
        out.push((key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Comma-separated list of reals, e.g. `0.1, 0.05, 0.01`.
pub fn parse_real_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_real)
        .collect()
}

/// Builds a CSV body from a header and rows of reals.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_real).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Contraction series as CSV with columns `j, a_j` (`j` starting at 1).
pub fn series_to_csv(values: &[f64]) -> String {
    let mut out = String::from("j,a_j\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, fmt_real(*v));
    }
    out
}

pub fn series_from_csv(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('j')) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 2 {
            return Err(Error::Parse(format!("line {}: expected `j,a_j`", lineno + 1)));
        }
        let j: usize = cols[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad index `{}`", lineno + 1, cols[0])))?;
        if j != values.len() + 1 {
            return Err(Error::Parse(format!(
                "line {}: index {j} out of sequence",
                lineno + 1
            )));
        }
        values.push(parse_real(cols[1])?);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kv_rejects_garbage() {
        assert!(kv_pairs("a = 1\nnonsense\n").is_err());
        let kv = kv_pairs("  # header\nseed = 7 # trailing\n\n").unwrap();
        assert_eq!(kv, vec![("seed".to_string(), "7".to_string())]);
    }

    #[test]
    fn series_csv_validates_indices() {
        assert!(series_from_csv("j,a_j\n1,0.5\n3,0.1\n").is_err());
        assert_eq!(series_from_csv("j,a_j\n1,0.5\n2,-1\n").unwrap(), vec![0.5, -1.0]);
    }

    proptest! {
        #[test]
        fn reals_round_trip_through_text(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(parse_real(&fmt_real(x)).unwrap().to_bits(), x.to_bits());
        }

        #[test]
        fn series_round_trip(values in proptest::collection::vec(-1e3f64..1e3, 1..50)) {
            prop_assert_eq!(series_from_csv(&series_to_csv(&values)).unwrap(), values);
        }
    }
}
