//! Admissibility thresholds, exponent triples, transcendence-degree bounds
//! and Dirichlet exponents, all driven by `ρ = log d / log δ`.
//!
//! Comparisons involving `ρ` are decided exactly through integer
//! inequalities between powers of `d` and `δ`; `ρ` itself and every
//! exponent are returned as balls.

use std::cell::RefCell;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed};

use crate::algebra::{Ball, Dyadic, Rational};
use crate::error::{Error, Result};
use crate::evaluator::EvaluatedPoint;

thread_local! {
    static RHO_CACHE: RefCell<HashMap<(u64, u64, u32), Ball>> = RefCell::new(HashMap::new());
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Algebraic `y`, point `(1 : f_1(y) : … : f_n(y))`.
    T1,
    /// Arbitrary `y`, point `(1 : y : f_1(y) : … : f_n(y))`.
    T2,
    /// Rational `p`, `f_i(0) = 0`.
    T3,
}

impl Theorem {
    pub fn number(self) -> u8 {
        match self {
            Theorem::T1 => 1,
            Theorem::T2 => 2,
            Theorem::T3 => 3,
        }
    }

    pub fn from_number(k: u8) -> Option<Theorem> {
        match k {
            1 => Some(Theorem::T1),
            2 => Some(Theorem::T2),
            3 => Some(Theorem::T3),
            _ => None,
        }
    }
}

/// `n`, `d = deg p`, `δ = ord p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Params {
    pub n: u32,
    pub d: u64,
    pub delta: u64,
}

impl Params {
    pub fn new(n: u32, d: u64, delta: u64) -> Result<Params> {
        if delta < 2 {
            return Err(Error::OrderTooSmall(delta as usize));
        }
        if d < delta {
            return Err(Error::InvalidArgument(format!("d = {d} must be at least δ = {delta}")));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        Ok(Params { n, d, delta })
    }

    /// `ρ` as an exact rational when `d^b = δ^a` for some small `a/b`.
    pub fn rho_exact(&self) -> Option<Rational> {
        let (d, delta) = (BigInt::from(self.d), BigInt::from(self.delta));
        let ratio = (self.d as f64).ln() / (self.delta as f64).ln();
        (1u32..=64).find_map(|b| {
            let a = (ratio * f64::from(b)).round() as u32;
            (a > 0 && Pow::pow(&d, b) == Pow::pow(&delta, a)).then(|| Rational::new(a.into(), b.into()))
        })
    }

    pub fn rho(&self, prec: u32) -> Ball {
        if let Some(q) = self.rho_exact() {
            return Ball::from_rational(&q, prec);
        }
        let key = (self.d, self.delta, prec);
        if let Some(b) = RHO_CACHE.with(|c| c.borrow().get(&key).cloned()) {
            return b;
        }
        let wp = prec + 16;
        let ld = Ball::from_i64(self.d as i64, wp).ln().expect("d ≥ 2");
        let lde = Ball::from_i64(self.delta as i64, wp).ln().expect("δ ≥ 2");
        let rho = ld.div(&lde).expect("ln δ > 0").with_prec(prec);
        RHO_CACHE.with(|c| c.borrow_mut().insert(key, rho.clone()));
        rho
    }

    /// Whether `a·ρ < b`, i.e. `d^a < δ^b` (`a ≥ 1`).
    fn rho_times_lt(&self, a: u32, b: i64) -> bool {
        b > 0 && Pow::pow(&BigInt::from(self.d), a) < Pow::pow(&BigInt::from(self.delta), b as u32)
    }

    /// `⌊a·ρ⌋`: the largest `t` with `δ^t ≤ d^a`.
    fn floor_rho_times(&self, a: u32) -> i64 {
        let target = Pow::pow(&BigInt::from(self.d), a);
        let delta = BigInt::from(self.delta);
        let mut t = 0i64;
        let mut pw = BigInt::one();
        loop {
            let next = &pw * &delta;
            if next > target {
                return t;
            }
            pw = next;
            t += 1;
        }
    }

    /// `⌈a·ρ⌉`.
    fn ceil_rho_times(&self, a: u32) -> i64 {
        let f = self.floor_rho_times(a);
        let exact = Pow::pow(&BigInt::from(self.delta), f as u32) == Pow::pow(&BigInt::from(self.d), a);
        if exact {
            f
        } else {
            f + 1
        }
    }

    /// Whether dimension `k` is admissible for the theorem, decided exactly.
    pub fn admissible(&self, theorem: Theorem, k: u32) -> bool {
        let n = i64::from(self.n);
        let k = i64::from(k);
        match theorem {
            // k < n+1−ρ ⇔ d < δ^{n+1−k}
            Theorem::T1 => self.rho_times_lt(1, n + 1 - k),
            // k < n+1−2ρ ⇔ d² < δ^{n+1−k}
            Theorem::T2 => self.rho_times_lt(2, n + 1 - k),
            // k < 2n+1−ρ(n+1) ⇔ d^{n+1} < δ^{2n+1−k}
            Theorem::T3 => self.rho_times_lt(self.n + 1, 2 * n + 1 - k),
        }
    }
}

fn int_ball(v: i64, prec: u32) -> Ball {
    Ball::from_i64(v, prec)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thresholds {
    /// `n + 1 − ρ`
    pub t1: Ball,
    /// `n + 1 − 2ρ`
    pub t2: Ball,
    /// `2n + 1 − ρ(n + 1)`
    pub t3: Ball,
}

pub fn thresholds(params: &Params, prec: u32) -> Thresholds {
    let rho = params.rho(prec);
    let n = i64::from(params.n);
    Thresholds {
        t1: &int_ball(n + 1, prec) - &rho,
        t2: &int_ball(n + 1, prec) - &rho.mul_2exp(1),
        t3: &int_ball(2 * n + 1, prec) - &(&rho * &int_ball(n + 1, prec)),
    }
}

/// The exponent triple of the measure
/// `log Dist(x, W) ≥ −C (h + deg^inner)^bracket · deg^degree_exp`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentReport {
    pub theorem: Theorem,
    pub params: Params,
    pub k: u32,
    pub epsilon: Rational,
    pub rho: Ball,
    pub threshold: Ball,
    pub admissible: bool,
    pub inner: Ball,
    pub bracket: Ball,
    pub degree_exp: Ball,
}

/// Fills the exponent triple of the chosen theorem for dimension `k`.
/// `ε` is not used by Theorem 3.
pub fn exponents(theorem: Theorem, params: &Params, k: u32, epsilon: &Rational, prec: u32) -> Result<ExponentReport> {
    if k >= params.n {
        return Err(Error::InvalidArgument(format!("k = {k} must be at most n − 1 = {}", params.n - 1)));
    }
    if !epsilon.is_positive() {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let th = thresholds(params, prec);
    let threshold = match theorem {
        Theorem::T1 => th.t1,
        Theorem::T2 => th.t2,
        Theorem::T3 => th.t3,
    };
    if !params.admissible(theorem, k) {
        return Err(Error::NotAdmissible { k: k as usize, threshold: threshold.mid_decimal(20) });
    }
    let wp = prec + 32;
    let rho = params.rho(wp);
    let inv_rho = Ball::one(wp).div(&rho).expect("ρ ≥ 1");
    let (n, kk) = (i64::from(params.n), i64::from(k));
    let b = |v: i64| int_ball(v, wp);
    let q = |num: &Ball, den: &Ball| num.div(den).expect("admissible denominators are positive");
    let eps = Ball::from_rational(epsilon, wp);
    let n_k = b(n - kk);
    let k1_over = q(&b(kk + 1), &n_k);
    let n1_over = q(&b(n + 1), &n_k);
    let (inner, bracket, degree_exp) = match theorem {
        Theorem::T1 => {
            let inner = q(&(&b(n + 1 - kk) + &eps), &(&b(n + 1 - kk) - &rho));
            let deg = &inv_rho * &k1_over;
            (inner, &n1_over - &deg, deg)
        }
        Theorem::T2 => {
            let inner = q(&(&(&b(n + 1 - kk) - &rho) + &eps), &(&b(n + 1 - kk) - &rho.mul_2exp(1)));
            let deg = &inv_rho * &k1_over;
            (inner, &n1_over.mul_2exp(1) - &deg, &deg - &n1_over)
        }
        Theorem::T3 => {
            let frac = q(&(&rho * &b(n + 1)), &b(2 * n - kk + 1));
            let inner = q(&Ball::one(wp), &(&Ball::one(wp) - &frac));
            (inner, &n1_over - &(&inv_rho * &k1_over), k1_over)
        }
    };
    Ok(ExponentReport {
        theorem,
        params: *params,
        k,
        epsilon: epsilon.clone(),
        rho: rho.with_prec(prec),
        threshold,
        admissible: true,
        inner: inner.with_prec(prec),
        bracket: bracket.with_prec(prec),
        degree_exp: degree_exp.with_prec(prec),
    })
}

/// Lower bounds for the transcendence degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrdegBounds {
    /// `n + 1 − ⌊ρ⌋` for `f_1(y), …, f_n(y)`.
    pub cor1: i64,
    /// `n` when `ρ < 2`.
    pub cor2: Option<i64>,
    /// `n + 1 − ⌊2ρ⌋` for `y, f_1(y), …, f_n(y)`.
    pub cor3: i64,
    /// `n − 1` when `ρ < 3/2`.
    pub cor4: Option<i64>,
    /// `2n + 1 − ρ(n + 1)` as a real number.
    pub thm3_real: Ball,
    /// `⌈2n + 1 − ρ(n + 1)⌉`.
    pub thm3_ceil: i64,
    /// `⌊2n + 1 − ρ(n + 1)⌋ + 1`; differs from the ceiling at integers.
    pub thm3_floor_plus_one: i64,
}

pub fn trdeg_bounds(params: &Params, prec: u32) -> TrdegBounds {
    let n = i64::from(params.n);
    TrdegBounds {
        cor1: n + 1 - params.floor_rho_times(1),
        cor2: params.rho_times_lt(1, 2).then_some(n),
        cor3: n + 1 - params.floor_rho_times(2),
        cor4: params.rho_times_lt(2, 3).then_some(n - 1),
        thm3_real: thresholds(params, prec).t3,
        thm3_ceil: 2 * n + 1 - params.floor_rho_times(params.n + 1),
        thm3_floor_plus_one: 2 * n + 1 - params.ceil_rho_times(params.n + 1) + 1,
    }
}

/// `n + 2` when `d = δ`, the only case in which the Theorem 1 measure at
/// `k = n − 1` has the shape `exp(−C h d^τ)`: there the bracket exponent is
/// `n + 1 − n/ρ = 1` and `inner + degree_exp = (2 + ε) + n`.
pub fn dirichlet_exponent(params: &Params) -> Option<u32> {
    (params.d == params.delta).then_some(params.n + 2)
}

/// `−C (h + deg^inner)^bracket · deg^degree_exp`.
pub fn log_dist_floor(report: &ExponentReport, c: &Rational, h: &Ball, deg: u64) -> Result<Ball> {
    if deg == 0 {
        return Err(Error::InvalidArgument("degree must be positive".into()));
    }
    if !c.is_positive() {
        return Err(Error::InvalidArgument("C must be positive".into()));
    }
    let prec = report.inner.prec().max(h.prec());
    let dg = Ball::from_i64(deg as i64, prec);
    let base = h + &dg.pow(&report.inner)?;
    let value = &base.pow(&report.bracket)? * &dg.pow(&report.degree_exp)?;
    Ok(-&(&Ball::from_rational(c, prec) * &value))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureFloor {
    pub log_dist: Ball,
    /// `log Dist + deg·log‖x‖ + h`, only for hypersurfaces (`k = n − 1`).
    pub log_p: Option<Ball>,
}

/// Floors for `log Dist(x, W)` and, for a hypersurface `W = Z(P)`,
/// `log|P(x)|`, using `log Dist = log|P(x)| − deg P·log‖x‖ − log‖P‖` with
/// max-norms and `h = log‖P‖`.
pub fn measure_floor(report: &ExponentReport, c: &Rational, h: &Ball, deg: u64, point: &EvaluatedPoint) -> Result<MeasureFloor> {
    let log_dist = log_dist_floor(report, c, h, deg)?;
    let log_p = if report.k + 1 == report.params.n {
        let norm = max_norm(&point.coords);
        let prec = log_dist.prec();
        Some(&(&log_dist + &(&Ball::from_i64(deg as i64, prec) * &norm.ln()?)) + h)
    } else {
        None
    };
    Ok(MeasureFloor { log_dist, log_p })
}

/// Enclosure of `max_i |x_i|`.
pub fn max_norm(coords: &[Ball]) -> Ball {
    let prec = coords.iter().map(Ball::prec).max().unwrap_or(64);
    let lo = coords.iter().map(Ball::abs_lower).max().unwrap_or_else(Dyadic::zero);
    let hi = coords.iter().map(Ball::abs_upper).max().unwrap_or_else(Dyadic::zero);
    let mid = lo.add(&hi).mul_2exp(-1);
    let rad = hi.sub(&mid);
    Ball::new(mid, rad, prec)
}
