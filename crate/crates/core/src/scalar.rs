//! Exact rational scalars and dense vectors over them.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Arbitrary-precision rational. Always kept in lowest terms with a positive
/// denominator by `num_rational`.
pub type Scalar = BigRational;

/// Dense column vector of exact rationals.
pub type Vector = Vec<Scalar>;

pub fn int(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

/// `num / den`. Panics on a zero denominator; use [`parse_scalar`] for
/// untrusted input.
pub fn rat(num: i64, den: i64) -> Scalar {
    assert!(den != 0, "zero denominator");
    Scalar::new(BigInt::from(num), BigInt::from(den))
}

pub fn vector(entries: &[i64]) -> Vector {
    entries.iter().map(|&e| int(e)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseScalarError {
    #[error("empty rational literal")]
    Empty,
    #[error("zero denominator in '{0}'")]
    ZeroDenominator(String),
    #[error("malformed rational literal '{0}' (expected integer or integer/integer)")]
    Malformed(String),
}

/// Parses `"7"`, `"-3/4"` or `" 10 / 6 "`. Floating literals are rejected.
pub fn parse_scalar(text: &str) -> Result<Scalar, ParseScalarError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ParseScalarError::Empty);
    }
    let parse_int = |s: &str| -> Result<BigInt, ParseScalarError> {
        let s = s.trim();
        let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseScalarError::Malformed(text.to_string()));
        }
        BigInt::from_str(s).map_err(|_| ParseScalarError::Malformed(text.to_string()))
    };
    match text.split_once('/') {
        None => Ok(Scalar::from_integer(parse_int(text)?)),
        Some((num, den)) => {
            let num = parse_int(num)?;
            let den = parse_int(den)?;
            if den.is_zero() {
                return Err(ParseScalarError::ZeroDenominator(text.to_string()));
            }
            Ok(Scalar::new(num, den))
        }
    }
}

/// Canonical text form: `"n"` for integers, `"n/d"` otherwise.
pub fn format_scalar(x: &Scalar) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Scalar::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

pub fn add(a: &[Scalar], b: &[Scalar]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Scalar], b: &[Scalar]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Scalar], k: &Scalar) -> Vector {
    a.iter().map(|x| x * k).collect()
}

pub fn is_zero_vector(a: &[Scalar]) -> bool {
    a.iter().all(Zero::is_zero)
}

/// Kronecker product; index `(i, j)` maps to `i * b.len() + j`.
pub fn kron(a: &[Scalar], b: &[Scalar]) -> Vector {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Convex combination `sum_i weights[i] * points[i]`.
pub fn combination(weights: &[Scalar], points: &[Vector]) -> Vector {
    assert_eq!(weights.len(), points.len());
    let dim = points.first().map_or(0, Vec::len);
    let mut out = vec![Scalar::zero(); dim];
    for (w, p) in weights.iter().zip(points) {
        if w.is_zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(p) {
            *o += w * x;
        }
    }
    out
}

pub fn centroid(points: &[Vector]) -> Vector {
    let n = points.len();
    assert!(n > 0, "centroid of an empty point set");
    let w = rat(1, n as i64);
    combination(&vec![w; n], points)
}

/// Rescales `v` by a positive factor so that its entries are coprime integers.
/// The zero vector is returned unchanged.
pub fn primitive(v: &[Scalar]) -> Vector {
    if is_zero_vector(v) {
        return v.to_vec();
    }
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Scalar::from_integer(lcm.clone())).to_integer()).collect();
    let gcd = ints
        .iter()
        .filter(|x| !x.is_zero())
        .fold(BigInt::zero(), |acc, x| acc.gcd(x));
    ints.into_iter()
        .map(|x| Scalar::from_integer(x / &gcd))
        .collect()
}

/// Lossy conversion for the floating-point cross-checks.
pub fn to_f64(x: &Scalar) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Display adaptor that prints a vector as `(a, b, c)`.
pub struct Show<'a>(pub &'a [Scalar]);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", format_scalar(x))?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_and_fractions() {
        assert_eq!(parse_scalar("7").unwrap(), int(7));
        assert_eq!(parse_scalar("-3/4").unwrap(), rat(-3, 4));
        assert_eq!(parse_scalar(" 10 / 6 ").unwrap(), rat(5, 3));
        assert_eq!(parse_scalar("+2").unwrap(), int(2));
    }

    #[test]
    fn rejects_bad_literals() {
        assert!(matches!(parse_scalar("1/0"), Err(ParseScalarError::ZeroDenominator(_))));
        assert!(matches!(parse_scalar("0.5"), Err(ParseScalarError::Malformed(_))));
        assert!(matches!(parse_scalar("1e3"), Err(ParseScalarError::Malformed(_))));
        assert!(matches!(parse_scalar("/3"), Err(ParseScalarError::Malformed(_))));
        assert!(matches!(parse_scalar(""), Err(ParseScalarError::Empty)));
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_scalar(&rat(6, -4)), "-3/2");
        assert_eq!(format_scalar(&rat(8, 4)), "2");
    }

    #[test]
    fn primitive_clears_denominators() {
        let v = vec![rat(1, 2), rat(-1, 3), int(0)];
        assert_eq!(primitive(&v), vector(&[3, -2, 0]));
        assert_eq!(primitive(&vector(&[4, 6])), vector(&[2, 3]));
    }

    #[test]
    fn kron_orders_row_major() {
        let a = vector(&[1, 2]);
        let b = vector(&[3, 4, 5]);
        assert_eq!(kron(&a, &b), vector(&[3, 4, 5, 6, 8, 10]));
    }
}
