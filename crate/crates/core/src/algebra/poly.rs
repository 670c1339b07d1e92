use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::ball::{Ball, ComplexBall};
use super::rational::Rational;
use super::series::PowerSeries;
use crate::error::{Error, Result};

/// Dense univariate polynomial with rational coefficients, lowest degree
/// first. The highest stored coefficient is nonzero; zero is the empty list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&c| Rational::from_integer(BigInt::from(c))).collect())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Polynomial::new(vec![c])
    }

    /// `c · z^k`.
    pub fn monomial(c: Rational, k: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); k + 1];
        coeffs[k] = c;
        Polynomial::new(coeffs)
    }

    /// The identity polynomial `z`.
    pub fn z() -> Self {
        Polynomial::monomial(Rational::one(), 1)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `z^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Order of vanishing at 0; `None` for the zero polynomial.
    pub fn ord(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Polynomial::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Divides out `z^k`; the caller guarantees the low coefficients vanish.
    pub fn shift_down(&self, k: usize) -> Self {
        Polynomial::new(self.coeffs.iter().skip(k).cloned().collect())
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Horner evaluation in ball arithmetic; the result encloses `P(x)` for
    /// every `x` in the input ball.
    pub fn eval_ball(&self, x: &Ball) -> Ball {
        let prec = x.prec();
        let mut acc = Ball::zero(prec);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + &Ball::from_rational(c, prec);
        }
        acc
    }

    pub fn eval_complex(&self, x: &ComplexBall) -> ComplexBall {
        let prec = x.re.prec();
        let mut acc = ComplexBall::from_real(Ball::zero(prec));
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + &ComplexBall::from_real(Ball::from_rational(c, prec));
        }
        acc
    }

    /// `P(s(z))` truncated to the order of `s`.
    pub fn eval_series(&self, s: &PowerSeries) -> PowerSeries {
        let mut acc = PowerSeries::zero(s.order());
        for c in self.coeffs.iter().rev() {
            acc = &acc * s;
            let c0 = acc.coeff(0) + c;
            acc.set_coeff(0, c0);
        }
        acc
    }

    /// `self(inner(z))`.
    pub fn compose(&self, inner: &Polynomial) -> Polynomial {
        let mut acc = Polynomial::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * inner) + &Polynomial::constant(c.clone());
        }
        acc
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// Euclidean division: `self = q·divisor + r` with `deg r < deg divisor`.
    pub fn div_rem(&self, divisor: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        let dd = divisor.degree().ok_or(Error::ZeroDivisor)?;
        let lead = divisor.leading().expect("nonzero").clone();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Polynomial::zero(), self.clone()));
        }
        let mut quot = vec![Rational::zero(); rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let c = &rem[i + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in divisor.coeffs.iter().enumerate() {
                    rem[i + j] -= &c * dc;
                }
            }
            quot[i] = c;
        }
        rem.truncate(dd);
        Ok((Polynomial::new(quot), Polynomial::new(rem)))
    }

    /// Monic greatest common divisor (zero if both are zero).
    pub fn gcd(&self, other: &Polynomial) -> Polynomial {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b).expect("b nonzero");
            a = b;
            b = r;
        }
        match a.leading().cloned() {
            Some(l) => a.scale(&l.recip()),
            None => a,
        }
    }

    /// Largest absolute value of a coefficient.
    pub fn max_abs_coeff(&self) -> Rational {
        self.coeffs.iter().map(|c| c.abs()).max().unwrap_or_else(Rational::zero)
    }

    /// `Σ |c_k| r^k`, an upper bound for `|P(z)|` on `|z| ≤ r`.
    pub fn abs_bound(&self, r: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * r + c.abs();
        }
        acc
    }

    /// Lower bound on the modulus of every nonzero complex root, via the
    /// Cauchy bound of the reversed polynomial. `None` when there are no
    /// nonzero roots (the polynomial is `c·z^k`) or it is zero.
    pub fn nonzero_root_modulus_lower_bound(&self) -> Option<Rational> {
        let k = self.ord()?;
        let stripped = self.shift_down(k);
        if stripped.is_constant() {
            return None;
        }
        let c0 = stripped.coeffs[0].abs();
        let rest = stripped.coeffs[1..].iter().map(|c| c.abs()).max().expect("nonconstant");
        // Roots of the reversal satisfy |1/z| < 1 + max|c_j / c_0|.
        Some(&c0 / (&c0 + rest))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let a = c.abs();
            let unit = a.is_one();
            match (k, unit) {
                (0, _) => write!(f, "{a}")?,
                (1, true) => write!(f, "z")?,
                (1, false) => write!(f, "{a}*z")?,
                (_, true) => write!(f, "z^{k}")?,
                (_, false) => write!(f, "{a}*z^{k}")?,
            }
        }
        Ok(())
    }
}
