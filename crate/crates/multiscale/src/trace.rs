//! Value-trace files: one round per line, single value or comma-separated
//! profile, decimal reals. `#` starts a comment; blank lines are ignored.

use crate::{Error, Result};

/// Parse a trace. All rows must have the same width; single-buyer traces are
/// rows of width one. Values must be finite.
pub fn parse_trace(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                reason: format!("not a number: {:?}", field.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: idx + 1,
                    reason: format!("non-finite value {v}"),
                });
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    line: idx + 1,
                    reason: format!("row has {} values, expected {w}", row.len()),
                });
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Serialize a trace. Values print in shortest round-trip form, so parsing
/// the output reproduces the rows bit-exactly.
pub fn write_trace(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Flatten a single-buyer trace (width-1 rows).
pub fn single_column(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() == 1 {
                Ok(row[0])
            } else {
                Err(Error::Parse {
                    line: i + 1,
                    reason: format!("expected a single value per row, got {}", row.len()),
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_singles_and_profiles() {
        let rows = parse_trace("1.5\n2\n# c\n\n3.25\n").unwrap();
        assert_eq!(rows, vec![vec![1.5], vec![2.0], vec![3.25]]);
        let rows = parse_trace("1, 2.5\n3,4\n").unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.5], vec![3.0, 4.0]]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_trace("1.0\nxyz\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_trace("1,2\n3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_trace("inf\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            rows in proptest::collection::vec(
                proptest::collection::vec(1.0f64..1e6, 1..4),
                0..20,
            )
        ) {
            // uniform width
            let w = rows.first().map_or(1, |r| r.len());
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|mut r| { r.truncate(w); while r.len() < w { r.push(1.0); } r }).collect();
            let text = write_trace(&rows);
            let back = parse_trace(&text).unwrap();
            prop_assert_eq!(rows, back);
        }
    }
}
