use std::io::Write;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["distortion", "method", "snr_db", "runtime_s", "seed"];

/// One line of a result table.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub distortion: String,
    pub method: String,
    /// SNR or angular SNR; `+∞` for perfect reconstruction.
    pub snr_db: f64,
    pub runtime_s: f64,
    pub seed: u64,
}

/// `%g`-style rendering with six significant digits.
pub fn format_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `# key=value` lines for the effective configuration, then the
/// header and rows.
pub fn write_csv<W: Write>(mut w: W, config: &[(String, String)], rows: &[EvalRow]) -> Result<()> {
    for (k, v) in config {
        if k.contains(['=', '\n']) || v.contains('\n') {
            return Err(Error::InvalidArgument(format!("config entry {k:?} cannot be embedded")));
        }
        writeln!(w, "# {k}={v}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in rows {
        out.write_record([
            r.distortion.clone(),
            r.method.clone(),
            format_sig(r.snr_db),
            format_sig(r.runtime_s),
            r.seed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
