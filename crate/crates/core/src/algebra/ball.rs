use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::dyadic::{round_div, Dyadic, Round};
use super::rational::Rational;
use crate::error::{Error, Result};

/// Radii carry this many mantissa bits, always rounded upward.
const RAD_BITS: u32 = 30;

fn rad_up(d: &Dyadic) -> Dyadic {
    d.round(RAD_BITS, Round::Up)
}

/// Real midpoint–radius enclosure `[mid − rad, mid + rad]`.
///
/// Every operation returns a ball containing every exact result obtainable
/// from points of the operand balls; rounding of the midpoint to `prec` bits
/// is absorbed into the radius.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ball {
    mid: Dyadic,
    rad: Dyadic,
    prec: u32,
}

impl Ball {
    pub fn new(mid: Dyadic, rad: Dyadic, prec: u32) -> Self {
        assert!(!rad.is_negative(), "negative radius");
        Ball::rounded(mid, rad, prec)
    }

    /// Rounds an exact midpoint to `prec` bits and widens `rad` accordingly.
    fn rounded(exact_mid: Dyadic, rad: Dyadic, prec: u32) -> Self {
        let mid = exact_mid.round(prec, Round::Nearest);
        let err = exact_mid.sub(&mid).abs();
        Ball { mid, rad: rad_up(&rad.add(&err)), prec }
    }

    pub fn exact(value: Dyadic, prec: u32) -> Self {
        Ball::rounded(value, Dyadic::zero(), prec)
    }

    pub fn zero(prec: u32) -> Self {
        Ball { mid: Dyadic::zero(), rad: Dyadic::zero(), prec }
    }

    pub fn one(prec: u32) -> Self {
        Ball { mid: Dyadic::one(), rad: Dyadic::zero(), prec }
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        Ball::exact(Dyadic::from_i64(v), prec)
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        let mid = Dyadic::from_rational(q, prec, Round::Nearest);
        let err = (q - mid.to_rational()).abs();
        let rad = if err.is_zero() {
            Dyadic::zero()
        } else {
            Dyadic::from_rational(&err, RAD_BITS, Round::Up)
        };
        Ball { mid, rad, prec }
    }

    pub fn mid(&self) -> &Dyadic {
        &self.mid
    }

    pub fn rad(&self) -> &Dyadic {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        Ball::rounded(self.mid.clone(), self.rad.clone(), prec)
    }

    pub fn lower(&self) -> Dyadic {
        self.mid.sub(&self.rad)
    }

    pub fn upper(&self) -> Dyadic {
        self.mid.add(&self.rad)
    }

    /// Upper bound for `|x|` over the ball.
    pub fn abs_upper(&self) -> Dyadic {
        rad_up(&self.mid.abs().add(&self.rad))
    }

    /// Lower bound for `|x|` over the ball (zero when the ball contains 0).
    pub fn abs_lower(&self) -> Dyadic {
        let d = self.mid.abs().sub(&self.rad);
        if d.is_positive() {
            d.round(RAD_BITS, Round::Down)
        } else {
            Dyadic::zero()
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.mid.abs() <= self.rad
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        self.mid.sub(x).abs() <= self.rad
    }

    pub fn contains_rational(&self, q: &Rational) -> bool {
        (self.mid.to_rational() - q).abs() <= self.rad.to_rational()
    }

    pub fn overlaps(&self, other: &Ball) -> bool {
        self.mid.sub(&other.mid).abs() <= self.rad.add(&other.rad)
    }

    pub fn is_subset_of(&self, other: &Ball) -> bool {
        self.mid.sub(&other.mid).abs().add(&self.rad) <= other.rad
    }

    /// Enlarges the radius by `err`.
    pub fn add_error(&self, err: &Dyadic) -> Ball {
        Ball { mid: self.mid.clone(), rad: rad_up(&self.rad.add(&err.abs())), prec: self.prec }
    }

    /// Smallest ball (at this representation) enclosing both.
    pub fn hull(&self, other: &Ball) -> Ball {
        let lo = self.lower().min(other.lower());
        let hi = self.upper().max(other.upper());
        let mid = lo.add(&hi).mul_2exp(-1);
        let rad = hi.sub(&lo).mul_2exp(-1);
        Ball::rounded(mid, rad, self.prec.max(other.prec))
    }

    pub fn mul_2exp(&self, k: i64) -> Ball {
        Ball { mid: self.mid.mul_2exp(k), rad: self.rad.mul_2exp(k), prec: self.prec }
    }

    pub fn abs(&self) -> Ball {
        if self.contains_zero() {
            let hi = self.abs_upper();
            Ball::rounded(hi.mul_2exp(-1), hi.mul_2exp(-1), self.prec)
        } else {
            Ball { mid: self.mid.abs(), rad: self.rad.clone(), prec: self.prec }
        }
    }

    pub fn sqr(&self) -> Ball {
        self * self
    }

    pub fn pow_u(&self, k: u32) -> Ball {
        let mut acc = Ball::one(self.prec);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = base.sqr();
            }
        }
        acc
    }

    pub fn inv(&self) -> Result<Ball> {
        let m = self.mid.abs();
        if m <= self.rad {
            return Err(Error::DenominatorMayVanish);
        }
        let prec = self.prec;
        let man = self.mid.mantissa();
        // 1/mid = (2^s / man) · 2^(−s−exp), quotient rounded to nearest.
        let s = u64::from(prec) + man.bits() + 8;
        let (q, r) = (BigInt::one() << s).div_rem(man);
        let exp = -(s as i64) - self.mid.exponent();
        let mut rad = if r.is_zero() { Dyadic::zero() } else { Dyadic::pow2(exp) };
        if !self.rad.is_zero() {
            // |1/x − 1/m| ≤ r / (|m| (|m| − r)) for |x − m| ≤ r.
            let den = m.mul(&m.sub(&self.rad)).round(RAD_BITS, Round::Down);
            rad = rad.add(&div_up(&self.rad, &den));
        }
        Ok(Ball::rounded(Dyadic::new(q, exp), rad, prec))
    }

    pub fn div(&self, other: &Ball) -> Result<Ball> {
        Ok(self * &other.inv()?)
    }

    /// Division by a positive machine integer.
    pub fn div_u64(&self, k: u64) -> Ball {
        assert!(k > 0);
        let kb = BigInt::from(k);
        let s = u64::from(self.prec) + 72;
        let (q, r) = (self.mid.mantissa() << s).div_rem(&kb);
        let exp = self.mid.exponent() - s as i64;
        let mut rad = if r.is_zero() { Dyadic::zero() } else { Dyadic::pow2(exp) };
        if !self.rad.is_zero() {
            rad = rad.add(&div_up(&self.rad, &Dyadic::from_bigint(kb)));
        }
        Ball::rounded(Dyadic::new(q, exp), rad, self.prec)
    }

    /// `ln 2` enclosed at `prec` bits.
    pub fn ln2(prec: u32) -> Ball {
        let wp = prec + 32;
        let third = Ball::from_rational(&Rational::new(1.into(), 3.into()), wp);
        atanh_series(&third).mul_2exp(1).with_prec(prec)
    }

    /// Natural logarithm; the ball must lie in `(0, ∞)`.
    pub fn ln(&self) -> Result<Ball> {
        if !self.lower().is_positive() {
            return Err(Error::Domain("ln"));
        }
        if self.rad.is_zero() {
            return Ok(ln_point(&self.mid, self.prec));
        }
        let lo = ln_point(&self.lower(), self.prec);
        let hi = ln_point(&self.upper(), self.prec);
        Ok(lo.hull(&hi))
    }

    pub fn exp(&self) -> Result<Ball> {
        if self.rad.is_zero() {
            return exp_point(&self.mid, self.prec);
        }
        let lo = exp_point(&self.lower(), self.prec)?;
        let hi = exp_point(&self.upper(), self.prec)?;
        Ok(lo.hull(&hi))
    }

    /// `self^e` for a positive base.
    pub fn pow(&self, e: &Ball) -> Result<Ball> {
        let wp = self.prec.max(e.prec) + 32;
        let l = self.with_prec(wp).ln()?;
        Ok((&l * &e.with_prec(wp)).exp()?.with_prec(self.prec.max(e.prec)))
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    /// Midpoint as a decimal string with `digits` significant digits.
    pub fn mid_decimal(&self, digits: usize) -> String {
        self.mid.to_decimal(digits, Round::Nearest)
    }

    /// Radius as an upward-rounded decimal string.
    pub fn rad_decimal(&self) -> String {
        self.rad.to_decimal(3, Round::Up)
    }
}

/// `atanh(t) = Σ t^{2i+1}/(2i+1)` for `|t| ≤ 1/√2`, with rigorous tail.
fn atanh_series(t: &Ball) -> Ball {
    let prec = t.prec;
    let t2 = t.sqr();
    let mut term = t.clone();
    let mut sum = t.clone();
    let target = Dyadic::pow2(-(i64::from(prec) + 4));
    let mut i: u64 = 1;
    loop {
        term = &term * &t2;
        sum = &sum + &term.div_u64(2 * i + 1);
        i += 1;
        if term.abs_upper() < target || i > 100_000 {
            break;
        }
    }
    // Remaining terms are bounded by |t|^{2i+1} / (1 − t²) ≤ 2 |term|·t².
    let tail = term.abs_upper().mul(&t2.abs_upper()).mul_2exp(1);
    sum.add_error(&tail)
}

fn ln_point(x: &Dyadic, prec: u32) -> Ball {
    let wp = prec + 40;
    // x = f·2^k with f in [3/4, 3/2).
    let mut k = x.mag().expect("positive") - 1;
    let f0 = x.mul_2exp(-k);
    if f0 >= Dyadic::new(3.into(), -1) {
        k += 1;
    }
    let f = Ball::exact(x.mul_2exp(-k), wp);
    let one = Ball::one(wp);
    let t = (&f - &one).div(&(&f + &one)).expect("f + 1 > 0");
    let ln_f = atanh_series(&t).mul_2exp(1);
    let ln2 = Ball::ln2(wp);
    (&ln_f + &(&ln2 * &Ball::from_i64(k, wp))).with_prec(prec)
}

fn exp_point(x: &Dyadic, prec: u32) -> Result<Ball> {
    let approx = x.to_f64();
    if !approx.is_finite() || approx.abs() > 1e15 {
        return Err(Error::Domain("exp"));
    }
    const HALVINGS: u32 = 16;
    let wp = prec + 48 + HALVINGS;
    let k = (approx / std::f64::consts::LN_2).round() as i64;
    let s = &Ball::exact(x.clone(), wp) - &(&Ball::ln2(wp) * &Ball::from_i64(k, wp));
    let u = s.mul_2exp(-i64::from(HALVINGS));
    // Taylor series of exp(u), |u| < 2^-16.
    let mut term = Ball::one(wp);
    let mut sum = Ball::one(wp);
    let target = Dyadic::pow2(-(i64::from(wp) + 4));
    let mut i: u64 = 1;
    loop {
        term = (&term * &u).div_u64(i);
        sum = &sum + &term;
        i += 1;
        if term.abs_upper() < target || i > 100_000 {
            break;
        }
    }
    let tail = term.abs_upper().mul(&u.abs_upper()).mul_2exp(1);
    let mut y = sum.add_error(&tail);
    for _ in 0..HALVINGS {
        y = y.sqr();
    }
    Ok(y.mul_2exp(k).with_prec(prec))
}

/// Upper bound for `a / b`, both positive.
fn div_up(a: &Dyadic, b: &Dyadic) -> Dyadic {
    let s = 2 * u64::from(RAD_BITS) + b.bits();
    let q = round_div(&(a.mantissa() << s), b.mantissa(), Round::Up);
    rad_up(&Dyadic::new(q, a.exponent() - b.exponent() - s as i64))
}

fn combine_prec(a: &Ball, b: &Ball) -> u32 {
    a.prec.max(b.prec)
}

impl Add for &Ball {
    type Output = Ball;
    fn add(self, rhs: &Ball) -> Ball {
        Ball::rounded(self.mid.add(&rhs.mid), self.rad.add(&rhs.rad), combine_prec(self, rhs))
    }
}

impl Sub for &Ball {
    type Output = Ball;
    fn sub(self, rhs: &Ball) -> Ball {
        Ball::rounded(self.mid.sub(&rhs.mid), self.rad.add(&rhs.rad), combine_prec(self, rhs))
    }
}

impl Mul for &Ball {
    type Output = Ball;
    fn mul(self, rhs: &Ball) -> Ball {
        let mid = self.mid.mul(&rhs.mid);
        let rad = self
            .mid
            .abs()
            .mul(&rhs.rad)
            .add(&rhs.mid.abs().mul(&self.rad))
            .add(&self.rad.mul(&rhs.rad));
        Ball::rounded(mid, rad, combine_prec(self, rhs))
    }
}

impl Neg for &Ball {
    type Output = Ball;
    fn neg(self) -> Ball {
        Ball { mid: self.mid.neg(), rad: self.rad.clone(), prec: self.prec }
    }
}

macro_rules! forward_owned {
    ($ty:ty, $($tr:ident :: $m:ident),*) => {$(
        impl $tr<$ty> for $ty {
            type Output = $ty;
            fn $m(self, rhs: $ty) -> $ty { $tr::$m(&self, &rhs) }
        }
        impl $tr<&$ty> for $ty {
            type Output = $ty;
            fn $m(self, rhs: &$ty) -> $ty { $tr::$m(&self, rhs) }
        }
    )*};
}

forward_owned!(Ball, Add::add, Sub::sub, Mul::mul);

impl Neg for Ball {
    type Output = Ball;
    fn neg(self) -> Ball {
        -&self
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = ((self.prec as f64) * std::f64::consts::LOG10_2) as usize;
        write!(f, "[{} +/- {}]", self.mid_decimal(digits.clamp(1, 40)), self.rad_decimal())
    }
}

/// Rectangular complex ball: independent real and imaginary enclosures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexBall {
    pub re: Ball,
    pub im: Ball,
}

impl ComplexBall {
    pub fn new(re: Ball, im: Ball) -> Self {
        ComplexBall { re, im }
    }

    pub fn from_real(re: Ball) -> Self {
        let prec = re.prec();
        ComplexBall { re, im: Ball::zero(prec) }
    }

    pub fn is_real(&self) -> bool {
        self.im.mid().is_zero() && self.im.rad().is_zero()
    }

    pub fn contains_zero(&self) -> bool {
        self.re.contains_zero() && self.im.contains_zero()
    }

    /// Upper bound for the modulus (via `|re| + |im|`).
    pub fn abs_upper(&self) -> Dyadic {
        rad_up(&self.re.abs_upper().add(&self.im.abs_upper()))
    }

    /// Upper bound for the max-norm `max(|re|, |im|)`.
    pub fn max_abs_upper(&self) -> Dyadic {
        self.re.abs_upper().max(self.im.abs_upper())
    }
}

impl Add for &ComplexBall {
    type Output = ComplexBall;
    fn add(self, rhs: &ComplexBall) -> ComplexBall {
        ComplexBall { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub for &ComplexBall {
    type Output = ComplexBall;
    fn sub(self, rhs: &ComplexBall) -> ComplexBall {
        ComplexBall { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul for &ComplexBall {
    type Output = ComplexBall;
    fn mul(self, rhs: &ComplexBall) -> ComplexBall {
        ComplexBall {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

forward_owned!(ComplexBall, Add::add, Sub::sub, Mul::mul);
