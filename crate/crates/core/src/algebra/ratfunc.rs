use std::fmt;

use num_traits::{One, Zero};

use super::ball::Ball;
use super::poly::Polynomial;
use super::rational::Rational;
use super::series::PowerSeries;
use crate::error::{Error, Result};

/// Quotient `num / den` of coprime polynomials, analytic at 0.
///
/// Normalized so that `den(0) = 1`; construction rejects functions with a
/// pole at the origin.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        let g = num.gcd(&den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (num.div_rem(&g)?.0, den.div_rem(&g)?.0)
        };
        let d0 = den.coeff(0);
        if d0.is_zero() {
            return Err(Error::NotAnalyticAtZero);
        }
        let s = d0.recip();
        Ok(RationalFunction { num: num.scale(&s), den: den.scale(&s) })
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        RationalFunction { num: p, den: Polynomial::one() }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        self.is_polynomial().then_some(&self.num)
    }

    /// `max(deg num, deg den)`; the zero function has degree 0.
    pub fn degree(&self) -> usize {
        self.num.degree().unwrap_or(0).max(self.den.degree().unwrap_or(0))
    }

    /// Order of vanishing at 0 (that of the numerator, since `den(0) ≠ 0`);
    /// `None` for the zero function.
    pub fn ord_zero(&self) -> Option<usize> {
        self.num.ord()
    }

    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        Ok(self.num.eval(x) / d)
    }

    pub fn eval_ball(&self, x: &Ball) -> Result<Ball> {
        let n = self.num.eval_ball(x);
        if self.is_polynomial() {
            return Ok(n);
        }
        n.div(&self.den.eval_ball(x))
    }

    /// Taylor coefficients at 0 through `z^order`, by long division.
    pub fn series_expand(&self, order: usize) -> Result<PowerSeries> {
        let d0 = self.den.coeff(0);
        if d0.is_zero() {
            return Err(Error::NotAnalyticAtZero);
        }
        let inv = d0.recip();
        let mut c: Vec<Rational> = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut acc = self.num.coeff(k);
            for (j, dj) in self.den.coeffs().iter().enumerate().skip(1).take(k) {
                if !dj.is_zero() {
                    acc -= dj * &c[k - j];
                }
            }
            c.push(if inv.is_one() { acc } else { acc * &inv });
        }
        Ok(PowerSeries::new(c))
    }

    /// `self(s(z))` for a series with `s(0) = 0`, to the order of `s`.
    pub fn eval_series(&self, s: &PowerSeries) -> Result<PowerSeries> {
        let n = self.num.eval_series(s);
        if self.is_polynomial() {
            return Ok(n);
        }
        n.div(&self.den.eval_series(s))
    }

    /// `self(inner(z))`.
    pub fn compose(&self, inner: &RationalFunction) -> Result<RationalFunction> {
        // Homogenize: P(n/d) = P_h(n, d) / d^D with D = deg of the outer map.
        let big = self.degree();
        let hom = |p: &Polynomial| -> Polynomial {
            let mut acc = Polynomial::zero();
            for (k, c) in p.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let term = &inner.num.pow(k as u32) * &inner.den.pow((big - k) as u32);
                acc = &acc + &term.scale(c);
            }
            acc
        };
        RationalFunction::new(hom(&self.num), hom(&self.den))
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write!(f, "{}", self.num.scale(&self.den.coeff(0).recip()))
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl From<Polynomial> for RationalFunction {
    fn from(p: Polynomial) -> Self {
        RationalFunction::from_polynomial(p)
    }
}
