//! Canonical text form `c * q^a p^b + ...` for [`PolySymbol`], terms in
//! descending graded-lexicographic order.

use std::fmt;

use num_complex::Complex64;

use super::symbol::PolySymbol;
use crate::error::{Error, Result};

fn fmt_coeff(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        let sign = if c.im.is_sign_negative() { '-' } else { '+' };
        format!("({}{}{}i)", c.re, sign, c.im.abs())
    }
}

impl fmt::Display for PolySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<((u32, u32), Complex64)> = self.terms().collect();
        if terms.is_empty() {
            return write!(f, "0");
        }
        terms.sort_by(|((a1, b1), _), ((a2, b2), _)| (a2 + b2, a2).cmp(&(a1 + b1, a1)));
        let rendered: Vec<String> = terms
            .into_iter()
            .map(|((a, b), c)| {
                let mut factors = Vec::new();
                if a > 0 {
                    factors.push(format!("q^{a}"));
                }
                if b > 0 {
                    factors.push(format!("p^{b}"));
                }
                if factors.is_empty() {
                    fmt_coeff(c)
                } else {
                    format!("{} * {}", fmt_coeff(c), factors.join(" "))
                }
            })
            .collect();
        write!(f, "{}", rendered.join(" + "))
    }
}

fn bad(s: &str, why: &str) -> Error {
    Error::Config(format!("cannot parse symbol term `{s}`: {why}"))
}

fn parse_real(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| bad(s, "not a number"))
}

fn parse_coeff(s: &str) -> Result<Complex64> {
    let s = s.trim();
    let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix("i)")) else {
        return Ok(Complex64::new(parse_real(s)?, 0.0));
    };
    // split at the sign of the imaginary part: the last +/- not opening the
    // string and not belonging to an exponent
    let bytes = inner.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(|| bad(s, "complex coefficient needs the form (a+bi)"))?;
    Ok(Complex64::new(
        parse_real(&inner[..split])?,
        parse_real(&inner[split..])?,
    ))
}

fn parse_monomial(s: &str) -> Result<(u32, u32)> {
    let (mut a, mut b) = (0, 0);
    for factor in s.split_whitespace() {
        let (var, exp) = match factor.split_once('^') {
            Some((v, e)) => (v, e.parse::<u32>().map_err(|_| bad(s, "bad exponent"))?),
            None => (factor, 1),
        };
        match var {
            "q" => a += exp,
            "p" => b += exp,
            _ => return Err(bad(s, "unknown variable")),
        }
    }
    Ok((a, b))
}

impl PolySymbol {
    /// Parse the canonical text form (and the looser variants `q p`, `q^2`,
    /// `a - b`).
    pub fn parse(s: &str, hbar: f64) -> Result<PolySymbol> {
        let s = s.trim();
        if s.is_empty() {
            return Err(bad(s, "empty input"));
        }
        let s = s.replace(" - ", " + -");
        let mut terms = Vec::new();
        for term in s.split(" + ") {
            let term = term.trim();
            let (coeff, mono) = match term.split_once('*') {
                Some((c, m)) => (parse_coeff(c)?, parse_monomial(m)?),
                None if term.starts_with(['q', 'p']) => {
                    (Complex64::new(1.0, 0.0), parse_monomial(term)?)
                }
                None if term.starts_with("-q") || term.starts_with("-p") => {
                    (Complex64::new(-1.0, 0.0), parse_monomial(&term[1..])?)
                }
                None => (parse_coeff(term)?, (0, 0)),
            };
            terms.push((mono, coeff));
        }
        PolySymbol::new(terms, hbar)
    }
}
