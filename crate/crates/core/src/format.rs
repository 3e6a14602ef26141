//! `QIM v1` model files.
//!
//! ```text
//! QIM v1
//! d=<int> m=<int> loss=<qfull|qbase> lambda=<decimal>
//! <D space-separated coefficients of quadric 1>
//! ...
//! <D space-separated coefficients of quadric m>
//! ```
//!
//! Coefficients are in canonical monomial order and written with the shortest
//! decimal representation that parses back to the same value, so a round trip
//! is bit-exact.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fitting::LossVariant;
use crate::model::QuadricIntersection;
use crate::polynomial::{coefficient_len, QuadraticPolynomial};
use crate::scalar::Real;

pub const MAGIC: &str = "QIM";
pub const VERSION: &str = "v1";

/// A model together with the training metadata stored in its file header.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile<T> {
    pub model: QuadricIntersection<T>,
    pub loss: LossVariant,
    pub lambda: T,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn header_field<'a>(token: Option<&'a str>, key: &str, line: usize) -> Result<&'a str> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing field `{key}`")))?;
    token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| parse_err(line, format!("expected `{key}=...`, found `{token}`")))
}

impl<T: Real> ModelFile<T> {
    pub fn new(model: QuadricIntersection<T>, loss: LossVariant, lambda: T) -> Self {
        Self {
            model,
            loss,
            lambda,
        }
    }

    pub fn serialize(&self) -> String {
        let d = self.model.dim();
        let mut out = String::with_capacity(32 + self.model.len() * coefficient_len(d) * 20);
        let _ = writeln!(out, "{MAGIC} {VERSION}");
        let _ = writeln!(
            out,
            "d={} m={} loss={} lambda={}",
            d,
            self.model.len(),
            self.loss.as_str(),
            self.lambda
        );
        for f in self.model.quadrics() {
            let coeffs = f.to_coefficients();
            for (i, c) in coeffs.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

        let (_, magic) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
        let magic = magic.trim_end();
        match magic.split_once(' ') {
            Some((MAGIC, VERSION)) => {}
            Some((MAGIC, other)) => return Err(Error::UnsupportedVersion(other.to_string())),
            _ => return Err(parse_err(1, format!("expected `{MAGIC} {VERSION}` header"))),
        }

        let (ln, header) = lines.next().ok_or_else(|| parse_err(2, "missing header line"))?;
        let mut tokens = header.split_whitespace();
        let d: usize = header_field(tokens.next(), "d", ln)?
            .parse()
            .map_err(|_| parse_err(ln, "`d` is not a nonnegative integer"))?;
        let m: usize = header_field(tokens.next(), "m", ln)?
            .parse()
            .map_err(|_| parse_err(ln, "`m` is not a nonnegative integer"))?;
        let loss = LossVariant::parse(header_field(tokens.next(), "loss", ln)?)
            .ok_or_else(|| parse_err(ln, "`loss` must be qfull or qbase"))?;
        let lambda: T = header_field(tokens.next(), "lambda", ln)?
            .parse()
            .map_err(|_| parse_err(ln, "`lambda` is not a number"))?;
        if let Some(extra) = tokens.next() {
            return Err(parse_err(ln, format!("unexpected field `{extra}`")));
        }
        if d == 0 {
            return Err(parse_err(ln, "d must be positive"));
        }
        if m == 0 {
            return Err(Error::InvalidArgument("model file declares m=0 quadrics".into()));
        }
        if !lambda.is_finite() || lambda < T::zero() {
            return Err(parse_err(ln, "lambda must be finite and nonnegative"));
        }

        let width = coefficient_len(d);
        let mut quadrics = Vec::with_capacity(m);
        for k in 0..m {
            let (ln, row) = lines
                .next()
                .ok_or_else(|| parse_err(3 + k, format!("expected {m} quadric lines, found {k}")))?;
            let coeffs = row
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<T>()
                        .map_err(|_| parse_err(ln, format!("`{tok}` is not a number")))
                })
                .collect::<Result<Vec<T>>>()?;
            if coeffs.len() != width {
                return Err(parse_err(
                    ln,
                    format!("expected {width} coefficients for d={d}, found {}", coeffs.len()),
                ));
            }
            let f = QuadraticPolynomial::from_coefficients(&coeffs)
                .map_err(|e| parse_err(ln, e.to_string()))?;
            quadrics.push(f);
        }
        if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(parse_err(ln, format!("trailing content `{extra}`")));
        }
        Ok(Self {
            model: QuadricIntersection::new(quadrics)?,
            loss,
            lambda,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelFile<f64> {
        let f = QuadraticPolynomial::from_coefficients(&[0.1, -2.5e-17, 3.0, 1.0 / 3.0, 0.0, -1.0])
            .unwrap();
        ModelFile::new(QuadricIntersection::new(vec![f]).unwrap(), LossVariant::QFull, 1.0)
    }

    #[test]
    fn exact_layout() {
        let text = sample().serialize();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("QIM v1"));
        assert_eq!(lines.next(), Some("d=2 m=1 loss=qfull lambda=1"));
        assert_eq!(lines.next().unwrap().split(' ').count(), 6);
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn round_trip() {
        let file = sample();
        assert_eq!(ModelFile::deserialize(&file.serialize()).unwrap(), file);
    }

    #[test]
    fn truncated_file() {
        let text = sample().serialize();
        let cut = &text[..text.len() - 8];
        assert!(matches!(ModelFile::<f64>::deserialize(cut), Err(Error::Parse { .. })));
        assert!(matches!(
            ModelFile::<f64>::deserialize("QIM v1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(ModelFile::<f64>::deserialize("").is_err());
    }

    #[test]
    fn zero_quadrics() {
        let err = ModelFile::<f64>::deserialize("QIM v1\nd=2 m=0 loss=qfull lambda=1\n").unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn version_mismatch() {
        let text = sample().serialize().replace("QIM v1", "QIM v2");
        assert_eq!(
            ModelFile::<f64>::deserialize(&text).unwrap_err(),
            Error::UnsupportedVersion("v2".into())
        );
    }

    #[test]
    fn malformed_rows() {
        let base = "QIM v1\nd=1 m=1 loss=qbase lambda=0.5\n";
        assert!(ModelFile::<f64>::deserialize(&format!("{base}1 2\n")).is_err());
        assert!(ModelFile::<f64>::deserialize(&format!("{base}1 2 x\n")).is_err());
        assert!(ModelFile::<f64>::deserialize(&format!("{base}1 2 NaN\n")).is_err());
        assert!(ModelFile::<f64>::deserialize(&format!("{base}1 2 3\n4 5 6\n")).is_err());
        let ok = ModelFile::<f64>::deserialize(&format!("{base}1 2 3\n")).unwrap();
        assert_eq!(ok.loss, LossVariant::QBase);
        assert_eq!(ok.lambda, 0.5);
    }
}
