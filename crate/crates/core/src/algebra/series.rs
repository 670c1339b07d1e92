use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::ball::Ball;
use super::poly::Polynomial;
use super::ratfunc::RationalFunction;
use super::rational::Rational;
use crate::error::{Error, Result};

/// Truncated power series known modulo `z^{N+1}`; stores exactly `N + 1`
/// coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerSeries {
    coeffs: Vec<Rational>,
}

impl PowerSeries {
    /// Panics on an empty coefficient list.
    pub fn new(coeffs: Vec<Rational>) -> Self {
        assert!(!coeffs.is_empty(), "a power series needs at least one coefficient");
        PowerSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        PowerSeries { coeffs: vec![Rational::zero(); order + 1] }
    }

    pub fn from_polynomial(p: &Polynomial, order: usize) -> Self {
        PowerSeries { coeffs: (0..=order).map(|k| p.coeff(k)).collect() }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn set_coeff(&mut self, k: usize, c: Rational) {
        self.coeffs[k] = c;
    }

    /// Index of the first nonzero coefficient; `None` if all known ones vanish.
    pub fn ord(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order(), "cannot extend a truncated series");
        PowerSeries { coeffs: self.coeffs[..=order].to_vec() }
    }

    pub fn to_polynomial(&self) -> Polynomial {
        Polynomial::new(self.coeffs.clone())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        PowerSeries { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// Product of the truncation with a polynomial, kept to this order.
    pub fn mul_poly(&self, p: &Polynomial) -> Self {
        let (a, la) = to_scaled(p.coeffs());
        let (b, lb) = to_scaled(&self.coeffs);
        PowerSeries { coeffs: from_scaled(convolve(&a, &b, self.coeffs.len()), la * lb) }
    }

    /// Quotient by a polynomial with nonzero constant term, to this order.
    pub fn div_poly(&self, d: &Polynomial) -> Result<Self> {
        let (t, l) = to_scaled(&self.coeffs);
        Ok(PowerSeries { coeffs: div_scaled(t, l, d)? })
    }

    /// `self · num / den` with a single pass through integer numerators.
    pub(crate) fn mul_div_poly(&self, num: &Polynomial, den: &Polynomial) -> Result<Self> {
        let (a, la) = to_scaled(num.coeffs());
        let (b, lb) = to_scaled(&self.coeffs);
        let t = convolve(&a, &b, self.coeffs.len());
        Ok(PowerSeries { coeffs: div_scaled(t, la * lb, den)? })
    }

    /// Quotient by a series with nonzero constant term, to the common order.
    pub fn div(&self, d: &PowerSeries) -> Result<Self> {
        let n = self.order().min(d.order());
        self.truncate(n).div_poly(&d.truncate(n).to_polynomial())
    }

    /// `self(p(z))` for a rational map with `p(0) = 0`, by Horner's scheme
    /// `f_0 + p·(f_1 + p·(f_2 + …))`, kept to this series' order.
    pub fn compose_rational(&self, p: &RationalFunction) -> Result<PowerSeries> {
        if !p.num().coeff(0).is_zero() {
            return Err(Error::InnerSeriesNotVanishing);
        }
        let n = self.order();
        let Some(delta) = p.ord_zero() else {
            let mut out = PowerSeries::zero(n);
            out.coeffs[0] = self.coeffs[0].clone();
            return Ok(out);
        };
        let top = n / delta;
        // Stage k is later multiplied by p^k, so it only matters modulo z^{N−δk+1}.
        if let Some(num) = p.as_polynomial() {
            // With p = a/c: f(p) = Σ F_k a^k c^{top−k} / (L c^top).
            let (f, l) = to_scaled(&self.coeffs[..=top]);
            let (a, c) = to_scaled(num.coeffs());
            let mut cpow = vec![BigInt::one()];
            for k in 0..top {
                let next = &cpow[k] * &c;
                cpow.push(next);
            }
            let mut h = vec![BigInt::zero(); n - delta * top + 1];
            h[0] = f[top].clone();
            for k in (0..top).rev() {
                h = convolve(&a, &h, n - delta * k + 1);
                h[0] += &f[k] * &cpow[top - k];
            }
            return Ok(PowerSeries { coeffs: from_scaled(h, l * &cpow[top]) });
        }
        let mut acc = PowerSeries::zero(n - delta * top);
        acc.coeffs[0] = self.coeffs[top].clone();
        for k in (0..top).rev() {
            acc.coeffs.resize(n - delta * k + 1, Rational::zero());
            acc = acc.mul_div_poly(p.num(), p.den())?;
            acc.coeffs[0] += &self.coeffs[k];
        }
        Ok(acc)
    }

    /// `self(inner(z))`.
    ///
    /// The inner series must vanish at 0. The result is known to order
    /// `min(N_inner, ord(inner)·(N_self + 1) − 1)`; when `ord(inner) = δ`,
    /// its coefficient of `z^k` only involves coefficients of `self` up to
    /// `⌊k/δ⌋`.
    pub fn compose(&self, inner: &PowerSeries) -> Result<PowerSeries> {
        if !inner.coeffs[0].is_zero() {
            return Err(Error::InnerSeriesNotVanishing);
        }
        let inner_ord = inner.ord().unwrap_or(inner.order() + 1);
        let order = inner.order().min(inner_ord * (self.order() + 1) - 1);
        let inner = inner.truncate(order.min(inner.order()));
        let top = (order / inner_ord).min(self.order());
        // Horner: c_0 + g(c_1 + g(c_2 + …)).
        let mut acc = PowerSeries::zero(order);
        for k in (0..=top).rev() {
            acc = acc.mul_series_same_order(&inner);
            acc.coeffs[0] += &self.coeffs[k];
        }
        Ok(acc)
    }

    fn mul_series_same_order(&self, rhs: &PowerSeries) -> PowerSeries {
        let n = self.order().min(rhs.order());
        let (a, la) = to_scaled(&self.coeffs[..=n]);
        let (b, lb) = to_scaled(&rhs.coeffs[..=n]);
        PowerSeries { coeffs: from_scaled(convolve(&a, &b, n + 1), la * lb) }
    }

    /// Evaluates the truncation as a polynomial in ball arithmetic.
    pub fn eval_ball(&self, x: &Ball) -> Ball {
        let prec = x.prec();
        let mut acc = Ball::zero(prec);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + &Ball::from_rational(c, prec);
        }
        acc
    }
}

/// Integer numerators over the least common denominator.
fn to_scaled(c: &[Rational]) -> (Vec<BigInt>, BigInt) {
    let den = c.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let nums = c.iter().map(|x| x.numer() * (&den / x.denom())).collect();
    (nums, den)
}

fn from_scaled(nums: Vec<BigInt>, den: BigInt) -> Vec<Rational> {
    nums.into_iter()
        .map(|x| if x.is_zero() { Rational::zero() } else { Rational::new(x, den.clone()) })
        .collect()
}

/// Product of two coefficient lists, keeping the first `len` terms.
fn convolve(a: &[BigInt], b: &[BigInt], len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// `(t / l) / d` to `t.len()` terms, fraction-free.
///
/// With `d = D/c` over the integers, `o_k = out_k · l · D_0^{k+1}` satisfies
/// `o_k = D_0^k c t_k − Σ_{j≥1} D_j D_0^{j−1} o_{k−j}`.
fn div_scaled(t: Vec<BigInt>, l: BigInt, d: &Polynomial) -> Result<Vec<Rational>> {
    if d.coeff(0).is_zero() {
        return Err(Error::ZeroDivisor);
    }
    let (dd, c) = to_scaled(d.coeffs());
    let d0 = dd[0].clone();
    let mut taps = Vec::with_capacity(dd.len().saturating_sub(1));
    let mut scale = BigInt::one();
    for dj in dd.iter().skip(1).take(t.len()) {
        taps.push(dj * &scale);
        scale *= &d0;
    }
    let mut o: Vec<BigInt> = Vec::with_capacity(t.len());
    let mut lead = c;
    for (k, tk) in t.into_iter().enumerate() {
        let mut acc = tk * &lead;
        for (j, tap) in taps.iter().enumerate().take(k) {
            let prev = &o[k - 1 - j];
            if !tap.is_zero() && !prev.is_zero() {
                acc -= tap * prev;
            }
        }
        o.push(acc);
        lead *= &d0;
    }
    let mut den = l * &d0;
    Ok(o.into_iter()
        .map(|x| {
            let q = if x.is_zero() { Rational::zero() } else { Rational::new(x, den.clone()) };
            den *= &d0;
            q
        })
        .collect())
}

impl Add for &PowerSeries {
    type Output = PowerSeries;
    fn add(self, rhs: &PowerSeries) -> PowerSeries {
        let n = self.order().min(rhs.order());
        PowerSeries { coeffs: (0..=n).map(|k| &self.coeffs[k] + &rhs.coeffs[k]).collect() }
    }
}

impl Sub for &PowerSeries {
    type Output = PowerSeries;
    fn sub(self, rhs: &PowerSeries) -> PowerSeries {
        let n = self.order().min(rhs.order());
        PowerSeries { coeffs: (0..=n).map(|k| &self.coeffs[k] - &rhs.coeffs[k]).collect() }
    }
}

impl Mul for &PowerSeries {
    type Output = PowerSeries;
    fn mul(self, rhs: &PowerSeries) -> PowerSeries {
        self.mul_series_same_order(rhs)
    }
}
