use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use super::rational::Rational;

/// Rounding direction: `Down` is toward −∞, `Up` toward +∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Round {
    Down,
    Up,
    Nearest,
}

/// Exact binary floating-point number `mantissa · 2^exponent`.
///
/// Stored normalized (odd mantissa, or zero with exponent 0), so structural
/// equality is numeric equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    man: BigInt,
    exp: i64,
}

fn pow2(k: u64) -> BigInt {
    BigInt::one() << k
}

impl Dyadic {
    pub fn new(man: BigInt, exp: i64) -> Self {
        if man.is_zero() {
            return Dyadic { man, exp: 0 };
        }
        let tz = man.trailing_zeros().unwrap_or(0);
        if tz == 0 {
            Dyadic { man, exp }
        } else {
            Dyadic { man: man >> tz, exp: exp + tz as i64 }
        }
    }

    pub fn zero() -> Self {
        Dyadic { man: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { man: BigInt::one(), exp: 0 }
    }

    pub fn from_i64(v: i64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Dyadic::new(v, 0)
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Self {
        Dyadic { man: BigInt::one(), exp: k }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.man
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.man.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.man.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.man.is_positive()
    }

    pub fn abs(&self) -> Self {
        Dyadic { man: self.man.abs(), exp: self.exp }
    }

    pub fn neg(&self) -> Self {
        Dyadic { man: -&self.man, exp: self.exp }
    }

    pub fn bits(&self) -> u64 {
        self.man.bits()
    }

    /// Smallest `m` with `|x| < 2^m`; `None` for zero.
    pub fn mag(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp + self.bits() as i64)
        }
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.man << (self.exp - e) as u64;
        let b = &other.man << (other.exp - e) as u64;
        Dyadic::new(a + b, e)
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() || other.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { man: &self.man * &other.man, exp: self.exp + other.exp }
    }

    pub fn mul_2exp(&self, k: i64) -> Dyadic {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { man: self.man.clone(), exp: self.exp + k }
    }

    /// Rounds to at most `prec` mantissa bits.
    pub fn round(&self, prec: u32, mode: Round) -> Dyadic {
        let bits = self.bits();
        let prec = u64::from(prec.max(2));
        if bits <= prec {
            return self.clone();
        }
        let shift = bits - prec;
        let rounded = round_div(&self.man, &pow2(shift), mode);
        Dyadic::new(rounded, self.exp + shift as i64)
    }

    /// Rounds `q` to a dyadic with at most `prec` mantissa bits.
    pub fn from_rational(q: &Rational, prec: u32, mode: Round) -> Dyadic {
        if q.is_zero() {
            return Dyadic::zero();
        }
        let num = q.numer();
        let den = q.denom();
        let s = i64::from(prec) + 2 - (num.bits() as i64 - den.bits() as i64);
        let (n, d) = if s >= 0 {
            (num << s as u64, den.clone())
        } else {
            (num.clone(), den << (-s) as u64)
        };
        let man = round_div(&n, &d, mode);
        Dyadic::new(man, -s).round(prec, mode)
    }

    pub fn to_rational(&self) -> Rational {
        if self.exp >= 0 {
            Rational::from_integer(&self.man << self.exp as u64)
        } else {
            Rational::new(self.man.clone(), pow2((-self.exp) as u64))
        }
    }

    /// Nearest integer (ties away from zero are not guaranteed; ties go up).
    pub fn round_to_int(&self) -> BigInt {
        if self.exp >= 0 {
            &self.man << self.exp as u64
        } else {
            round_div(&self.man, &pow2((-self.exp) as u64), Round::Nearest)
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.bits();
        let (top, e) = if bits > 62 {
            let shift = bits - 62;
            (&self.man >> shift, self.exp + shift as i64)
        } else {
            (self.man.clone(), self.exp)
        };
        let m = top.to_f64().unwrap_or(0.0);
        scale_f64(m, e)
    }

    /// Decimal string; scientific notation outside a moderate exponent range.
    pub fn to_decimal(&self, digits: usize, mode: Round) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1);
        let q = self.to_rational();
        let mut e10 = (self.to_log2_approx() * std::f64::consts::LOG10_2).floor() as i64;
        let limit = pow10(digits as u64);
        let lower = pow10(digits as u64 - 1);
        let mut scaled;
        loop {
            let shift = digits as i64 - 1 - e10;
            let s = if shift >= 0 {
                &q * Rational::from_integer(pow10(shift as u64))
            } else {
                &q / Rational::from_integer(pow10((-shift) as u64))
            };
            scaled = round_div(s.numer(), s.denom(), mode);
            let a = scaled.abs();
            if a >= limit {
                e10 += 1;
            } else if a < lower {
                e10 -= 1;
            } else {
                break;
            }
        }
        let negative = scaled.is_negative();
        let body = scaled.abs().to_string();
        let sign = if negative { "-" } else { "" };
        if (-6..21).contains(&e10) {
            if e10 >= 0 {
                let int_len = (e10 + 1) as usize;
                if body.len() <= int_len {
                    let zeros = "0".repeat(int_len - body.len());
                    format!("{sign}{body}{zeros}")
                } else {
                    let (i, f) = body.split_at(int_len);
                    format!("{sign}{i}.{f}")
                }
            } else {
                let zeros = "0".repeat((-e10 - 1) as usize);
                format!("{sign}0.{zeros}{body}")
            }
        } else {
            let (i, f) = body.split_at(1);
            if f.is_empty() {
                format!("{sign}{i}e{e10}")
            } else {
                format!("{sign}{i}.{f}e{e10}")
            }
        }
    }

    /// Approximate `log2 |x|`; `-inf` for zero.
    pub fn to_log2_approx(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.bits();
        let (top, e) = if bits > 62 {
            let shift = bits - 62;
            (&self.man >> shift, self.exp + shift as i64)
        } else {
            (self.man.clone(), self.exp)
        };
        top.abs().to_f64().unwrap_or(1.0).log2() + e as f64
    }
}

fn pow10(k: u64) -> BigInt {
    Pow::pow(&BigInt::from(10u32), k)
}

fn scale_f64(mut m: f64, mut e: i64) -> f64 {
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
        if m.is_infinite() {
            return m;
        }
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
        if m == 0.0 {
            return m;
        }
    }
    m * 2f64.powi(e as i32)
}

/// `n / d` rounded to an integer in the given direction (`d > 0`).
pub(crate) fn round_div(n: &BigInt, d: &BigInt, mode: Round) -> BigInt {
    let (q, r) = n.div_mod_floor(d);
    if r.is_zero() {
        return q;
    }
    match mode {
        Round::Down => q,
        Round::Up => q + 1,
        Round::Nearest => {
            if (&r << 1u32) >= *d {
                q + 1
            } else {
                q
            }
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sub(other).man.sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = ((self.bits() as f64) * std::f64::consts::LOG10_2).ceil() as usize + 1;
        write!(f, "{}", self.to_decimal(digits.min(60), Round::Nearest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::rat;

    #[test]
    fn normalization_makes_equality_numeric() {
        assert_eq!(Dyadic::new(BigInt::from(12), 0), Dyadic::new(BigInt::from(3), 2));
        assert_eq!(Dyadic::new(BigInt::zero(), 17), Dyadic::zero());
    }

    #[test]
    fn directed_rounding_brackets() {
        let third = rat(1, 3);
        let lo = Dyadic::from_rational(&third, 53, Round::Down);
        let hi = Dyadic::from_rational(&third, 53, Round::Up);
        assert!(lo.to_rational() < third && third < hi.to_rational());
        assert!(lo.bits() <= 53 && hi.bits() <= 53);
        let neg = Dyadic::from_rational(&-third.clone(), 53, Round::Down);
        assert!(neg.to_rational() < -third);
    }

    #[test]
    fn round_to_int_nearest() {
        assert_eq!(Dyadic::new(BigInt::from(5), -1).round_to_int(), BigInt::from(3));
        assert_eq!(Dyadic::new(BigInt::from(-5), -1).round_to_int(), BigInt::from(-2));
        assert_eq!(Dyadic::new(BigInt::from(7), -2).round_to_int(), BigInt::from(2));
    }

    #[test]
    fn decimal_formatting() {
        let half = Dyadic::pow2(-1);
        assert_eq!(half.to_decimal(3, Round::Nearest), "0.500");
        assert_eq!(Dyadic::from_i64(1234).to_decimal(2, Round::Up), "1300");
        assert_eq!(Dyadic::pow2(-200).to_decimal(3, Round::Up), "6.23e-61");
        assert_eq!(Dyadic::from_i64(-3).to_decimal(1, Round::Nearest), "-3");
    }

    #[test]
    fn f64_conversion() {
        assert_eq!(Dyadic::from_rational(&rat(3, 4), 64, Round::Nearest).to_f64(), 0.75);
        assert!(Dyadic::pow2(-5000).to_f64() == 0.0);
    }
}
