//! Number formatting and plain-text tables.

use ati_core::polykernel::rational::{q_frac, Q};
use serde_json::Value;

pub const SIG_DIGITS: usize = 12;

/// `x` with 12 significant digits, trailing zeros removed.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{:.*e}", SIG_DIGITS - 1, x);
        let (mantissa, exponent) = s.split_once('e').expect("exponent form");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

/// The value printed by [`num`], read back.
pub fn rounded(x: f64) -> f64 {
    if x.is_finite() {
        num(x).parse().expect("formatted number parses")
    } else {
        x
    }
}

/// Round every float in a JSON tree to the printed precision so that JSON
/// and tables carry identical values. Non-finite values become strings.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            serde_json::Number::from_f64(rounded(x)).map_or_else(|| Value::String(num(x)), Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn nums(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| num(*x)).collect();
    format!("[{}]", parts.join(", "))
}

/// Left-aligned columns separated by two spaces.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(headers.to_vec(), &mut out);
    line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect(), &mut out);
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

pub fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<String>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| num(*v)).collect())
        .collect()
}

/// Matrix as indented text rows.
pub fn matrix_text(name: &str, m: &nalgebra::DMatrix<f64>) -> String {
    let mut out = format!("{name} ({}x{}):\n", m.nrows(), m.ncols());
    for row in matrix_rows(m) {
        out.push_str(&format!("  [{}]\n", row.join(", ")));
    }
    out
}

/// Small-denominator rational within `rel` of `x`, if one exists with
/// denominator at most `max_den`; otherwise the 12-digit decimal value.
pub fn rationalize(x: f64, max_den: i64, rel: f64) -> Q {
    let target = rel * x.abs().max(1.0);
    // Continued-fraction convergents.
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (Some(h2), Some(k2)) = (
            a.checked_mul(h1).and_then(|v| v.checked_add(h0)),
            a.checked_mul(k1).and_then(|v| v.checked_add(k0)),
        ) else {
            break;
        };
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= target {
            return q_frac(h1, k1);
        }
        let frac = r - a as f64;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    ati_core::polykernel::rational::parse_q(&decimal(x)).expect("decimal parses")
}

/// Plain positional decimal (no exponent) with 12 significant digits.
fn decimal(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}
