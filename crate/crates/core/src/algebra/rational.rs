use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, Zero};

use crate::error::{Error, Result};

/// Exact rational number, always stored in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

/// Parses `"a/b"`, an integer, or a decimal such as `"-1.25"` or `"1e-40"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::InvalidArgument(format!("not a rational number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(all_digits.parse::<BigInt>().map_err(|_| bad())?);
    let shift = exponent - frac_part.len() as i64;
    if exponent.unsigned_abs() > 100_000 {
        return Err(bad());
    }
    let ten = BigInt::from(10u32);
    if shift >= 0 {
        value *= Rational::from_integer(Pow::pow(&ten, shift as u64));
    } else {
        value /= Rational::from_integer(Pow::pow(&ten, (-shift) as u64));
    }
    Ok(if negative { -value } else { value })
}

/// Combined bit length of numerator and denominator.
pub fn rational_bits(q: &Rational) -> u64 {
    q.numer().bits() + q.denom().bits()
}

#[cfg(test)]
pub(crate) fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
pub(crate) fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}
