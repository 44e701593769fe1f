//! CSV output with a reproducibility header.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::simulate::BerCurve;

pub const BER_HEADER: &str = "param,value,scheme,detector,coding,ber,ci_low,ci_high,trials";
pub const PDF_HEADER: &str = "eta,exact,solid,gaussian,empirical";

/// Ratio densities sampled on a grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PdfTable {
    pub eta: Vec<f64>,
    pub exact: Vec<f64>,
    pub solid: Vec<f64>,
    pub gaussian: Vec<f64>,
    pub empirical: Vec<f64>,
}

/// Ten significant digits in scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn write_ber_csv<W: Write>(w: &mut W, comment: &str, curves: &[BerCurve]) -> io::Result<()> {
    writeln!(w, "{comment}")?;
    writeln!(w, "{BER_HEADER}")?;
    for c in curves {
        for (v, e) in c.param_values.iter().zip(&c.estimates) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                c.param_name,
                fmt_num(*v),
                c.scheme,
                c.detector,
                c.coding,
                fmt_num(e.ber),
                fmt_num(e.ci_low),
                fmt_num(e.ci_high),
                e.bits
            )?;
        }
    }
    Ok(())
}

pub fn write_pdf_csv<W: Write>(w: &mut W, comment: &str, table: &PdfTable) -> io::Result<()> {
    writeln!(w, "{comment}")?;
    writeln!(w, "{PDF_HEADER}")?;
    for i in 0..table.eta.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_num(table.eta[i]),
            fmt_num(table.exact[i]),
            fmt_num(table.solid[i]),
            fmt_num(table.gaussian[i]),
            fmt_num(table.empirical[i])
        )?;
    }
    Ok(())
}

/// One data row of a BER CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRow {
    pub param: String,
    pub value: f64,
    pub scheme: String,
    pub detector: String,
    pub coding: String,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

/// Parses the rows of a BER CSV, skipping comment lines.
pub fn read_ber_csv(text: &str) -> Result<Vec<BerRow>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some(BER_HEADER) {
        return Err(Error::invalid("missing BER CSV header"));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::invalid(format!("malformed CSV row '{line}'"));
            if f.len() != 9 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(BerRow {
                param: f[0].to_string(),
                value: num(f[1])?,
                scheme: f[2].to_string(),
                detector: f[3].to_string(),
                coding: f[4].to_string(),
                ber: num(f[5])?,
                ci_low: num(f[6])?,
                ci_high: num(f[7])?,
                trials: f[8].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
