//! Number formatting and CSV sinks.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

/// Ten significant digits, positional for moderate exponents, trailing zeros trimmed.
pub fn sig10(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Fixed three decimals.
pub fn dec3(x: f64) -> String {
    format!("{x:.3}")
}

/// A file if a path is given, stdout otherwise.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create output file {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Writes a header and rows as CSV.
pub fn write_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    if let Some(p) = path {
        eprintln!("wrote {} rows to {}", rows.len(), p.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(sig10(0.0), "0");
        assert_eq!(sig10(1.0), "1");
        assert_eq!(sig10(600.0), "600");
        assert_eq!(sig10(0.1 + 0.2), "0.3");
        assert_eq!(sig10(0.984_000_000_000_1), "0.984");
        assert_eq!(sig10(std::f64::consts::PI), "3.141592654");
        assert_eq!(sig10(-2.0 / 3.0), "-0.6666666667");
        assert_eq!(sig10(1.234_567_890_12e-7), "1.23456789e-7");
        assert_eq!(sig10(6.02e23), "6.02e23");
        assert_eq!(sig10(9.999_999_999_9), "10");
        assert_eq!(sig10(f64::INFINITY), "inf");
    }

    #[test]
    fn significant_digits_are_preserved() {
        for x in [1.0 / 7.0, 123.456_789_012_3, 4.2e-5, 9.87e12, 0.000_123_456_789_987] {
            let back: f64 = sig10(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 5e-10, "{x} -> {}", sig10(x));
        }
    }
}
