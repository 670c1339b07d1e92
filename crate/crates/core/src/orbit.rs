//! Orbits `w_{m+1} = p(w_m)` of a point under a rational map with
//! `p(0) = 0`, certified convergence to 0, and the non-vanishing hypotheses
//! along the orbit.

use num_traits::{One, Signed, Zero};

use crate::algebra::{rational_bits, Ball, Dyadic, Polynomial, Rational, RationalFunction, Round};
use crate::error::{Error, Result};
use crate::system::MahlerSystem;

/// Default bound on the number of iterations.
pub const DEFAULT_MAX_ITER: usize = 64;

/// Iterates are kept exact until their size passes this many bits per bit
/// of working precision.
const EXACT_BITS_PER_PREC: u64 = 64;

/// Safety margin `2^-8` applied when comparing `|w_M|` with a root bound.
const MARGIN_LOG2: i64 = 8;

const MAX_HALVINGS: usize = 4096;

/// A ball iterate that may exceed `2^ESCAPE_LOG2` in modulus is no longer
/// followed.
const ESCAPE_LOG2: i64 = 1 << 16;

/// One point of an orbit: exact while affordable, then a ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Iterate {
    Exact(Rational),
    Approx(Ball),
}

impl Iterate {
    pub fn is_exact(&self) -> bool {
        matches!(self, Iterate::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Iterate::Exact(q) => Some(q),
            Iterate::Approx(_) => None,
        }
    }

    pub fn to_ball(&self, prec: u32) -> Ball {
        match self {
            Iterate::Exact(q) => Ball::from_rational(q, prec),
            Iterate::Approx(b) => b.with_prec(prec),
        }
    }

    /// Upper bound on `|w|`.
    pub fn abs_upper(&self) -> Dyadic {
        match self {
            Iterate::Exact(q) => Dyadic::from_rational(&q.abs(), 64, Round::Up),
            Iterate::Approx(b) => b.abs_upper(),
        }
    }

    /// Whether `|w| ≤ bound` is certain.
    pub fn abs_at_most(&self, bound: &Rational) -> bool {
        match self {
            Iterate::Exact(q) => q.abs() <= *bound,
            Iterate::Approx(b) => b.abs_upper() <= Dyadic::from_rational(bound, 64, Round::Down),
        }
    }

    /// `Some(true)` if certainly zero, `Some(false)` if certainly nonzero.
    fn zero_status(&self) -> Option<bool> {
        match self {
            Iterate::Exact(q) => Some(q.is_zero()),
            Iterate::Approx(b) if b.contains_zero() => None,
            Iterate::Approx(_) => Some(false),
        }
    }

    /// Whether `f(w) ≠ 0`; `None` when a ball cannot decide.
    fn poly_nonzero(&self, f: &Polynomial, prec: u32) -> Option<bool> {
        match self {
            Iterate::Exact(q) => Some(!f.eval(q).is_zero()),
            Iterate::Approx(b) => {
                let v = f.eval_ball(&b.with_prec(prec));
                (!v.contains_zero()).then_some(true)
            }
        }
    }
}

/// The iterates `w_0 = y, …, w_M` together with a disk `|z| ≤ r` that the
/// orbit has entered and on which `|p(z)| ≤ λ|z|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitCertificate {
    p: RationalFunction,
    iterates: Vec<Iterate>,
    basin_radius: Rational,
    contraction: Rational,
    prec: u32,
}

impl OrbitCertificate {
    pub fn p(&self) -> &RationalFunction {
        &self.p
    }

    pub fn y(&self) -> &Iterate {
        &self.iterates[0]
    }

    pub fn iterates(&self) -> &[Iterate] {
        &self.iterates
    }

    /// Index `M` of the last stored iterate.
    pub fn m(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn last(&self) -> &Iterate {
        self.iterates.last().expect("orbit is never empty")
    }

    pub fn basin_radius(&self) -> &Rational {
        &self.basin_radius
    }

    pub fn contraction(&self) -> &Rational {
        &self.contraction
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// True when every stored iterate is an exact rational.
    pub fn exact(&self) -> bool {
        self.iterates.iter().all(Iterate::is_exact)
    }

    /// Appends `steps` further iterates. They stay in the basin, so the
    /// certificate remains valid.
    pub fn extend(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            let next = step(&self.p, self.last(), self.prec)?;
            self.iterates.push(next);
        }
        Ok(())
    }

    /// Recomputes the same number of iterates from `w_0` at another
    /// precision.
    pub fn with_prec(&self, prec: u32) -> Result<OrbitCertificate> {
        let mut iterates = vec![self.iterates[0].clone()];
        for _ in 0..self.m() {
            let next = step(&self.p, iterates.last().expect("nonempty"), prec)?;
            iterates.push(next);
        }
        Ok(OrbitCertificate { iterates, prec, ..self.clone() })
    }
}

fn step(p: &RationalFunction, w: &Iterate, prec: u32) -> Result<Iterate> {
    match w {
        Iterate::Exact(q) => {
            let v = p.eval(q).map_err(|_| Error::Domain("orbit: iterate is a pole of p"))?;
            if rational_bits(&v) > EXACT_BITS_PER_PREC * u64::from(prec) {
                Ok(Iterate::Approx(Ball::from_rational(&v, prec)))
            } else {
                Ok(Iterate::Exact(v))
            }
        }
        Iterate::Approx(b) => Ok(Iterate::Approx(p.eval_ball(&b.with_prec(prec))?)),
    }
}

/// `(r, λ)` with `0 < λ ≤ 1/2` and `|p(z)| ≤ λ|z|` whenever `|z| ≤ r`.
///
/// With `p = z^δ·u/v`, on `|z| ≤ r` we have `|u| ≤ Σ|u_j| r^j` and
/// `|v| ≥ |v_0| − Σ_{j≥1} |v_j| r^j`; `r` is halved from 1 until
/// `r^{δ−1}·U(r)/V(r) ≤ 1/2`.
pub fn basin(p: &RationalFunction) -> Result<(Rational, Rational)> {
    let delta = p.ord_zero().ok_or(Error::InvalidSystem("p must not be identically zero".into()))?;
    if delta < 2 {
        return Err(Error::OrderTooSmall(delta));
    }
    let u = p.num().shift_down(delta);
    let v0 = p.den().coeff(0).abs();
    let v_rest = Polynomial::new(p.den().coeffs().iter().skip(1).cloned().collect());
    let half = Rational::new(1.into(), 2.into());
    let mut r = Rational::one();
    for _ in 0..MAX_HALVINGS {
        let v_low = &v0 - &r * v_rest.abs_bound(&r);
        if v_low.is_positive() {
            let lambda = pow(&r, delta - 1) * u.abs_bound(&r) / v_low;
            if lambda <= half {
                return Ok((r, lambda));
            }
        }
        r *= &half;
    }
    Err(Error::Domain("basin: no admissible radius found"))
}

fn pow(q: &Rational, k: usize) -> Rational {
    (0..k).fold(Rational::one(), |acc, _| acc * q)
}

/// Iterates `p` from a rational `y` until the orbit enters the basin.
///
/// Iterates are exact while their bit size stays below `64·prec`, then
/// continue as balls at `prec` bits.
pub fn compute_orbit(p: &RationalFunction, y: &Rational, max_iter: usize, prec: u32) -> Result<OrbitCertificate> {
    if y.is_zero() {
        return Err(Error::InvalidArgument("y must be nonzero".into()));
    }
    run_orbit(p, Iterate::Exact(y.clone()), max_iter, prec)
}

/// Same as [`compute_orbit`] for a point only known as a ball; the
/// certificate is then never exact.
pub fn compute_orbit_ball(p: &RationalFunction, y: &Ball, max_iter: usize) -> Result<OrbitCertificate> {
    if y.contains_zero() {
        return Err(Error::InvalidArgument("the ball for y must exclude 0".into()));
    }
    run_orbit(p, Iterate::Approx(y.clone()), max_iter, y.prec())
}

fn run_orbit(p: &RationalFunction, y: Iterate, max_iter: usize, prec: u32) -> Result<OrbitCertificate> {
    let (r, lambda) = basin(p)?;
    let mut iterates = vec![y];
    loop {
        let m = iterates.len() - 1;
        let w = &iterates[m];
        if w.zero_status() == Some(true) {
            return Err(Error::OrbitHitsZero(m));
        }
        if w.abs_at_most(&r) {
            break;
        }
        let escaped = matches!(w, Iterate::Approx(b) if b.abs_upper().mag().is_some_and(|e| e > ESCAPE_LOG2));
        if m >= max_iter || escaped {
            return Err(Error::DivergenceNotRuledOut(max_iter));
        }
        let next = step(p, w, prec)?;
        iterates.push(next);
    }
    // Inside the basin an iterate maps to 0 only at a root of u; follow the
    // orbit until it is closer to 0 than any such root.
    let delta = p.ord_zero().expect("basin exists");
    if let Some(bound) = p.num().shift_down(delta).nonzero_root_modulus_lower_bound() {
        let inner = strictly_inside(&bound);
        while iterates.len() <= max_iter {
            let w = iterates.last().expect("nonempty");
            if w.abs_at_most(&inner) {
                break;
            }
            let next = step(p, w, prec)?;
            if next.zero_status() == Some(true) {
                return Err(Error::OrbitHitsZero(iterates.len()));
            }
            iterates.push(next);
        }
    }
    Ok(OrbitCertificate { p: p.clone(), iterates, basin_radius: r, contraction: lambda, prec })
}

/// Outcome of checking the non-vanishing hypotheses along an orbit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypothesisReport {
    /// The orbit, possibly extended while certifying the tail.
    pub orbit: OrbitCertificate,
    pub nonzero_ok: bool,
    pub det_a_ok: bool,
    pub a_ok: bool,
    pub failing_index: Option<usize>,
}

impl HypothesisReport {
    pub fn all_ok(&self) -> bool {
        self.nonzero_ok && self.det_a_ok && self.a_ok
    }
}

/// A radius `s` with `s·(1 + 2^-8) < bound`.
fn strictly_inside(bound: &Rational) -> Rational {
    let margin = Rational::one() + Dyadic::pow2(-MARGIN_LOG2).to_rational();
    bound / margin * (Rational::one() - Dyadic::pow2(-2 * MARGIN_LOG2).to_rational())
}

/// How many extra iterates the tail check may add before giving up.
const MAX_TAIL_STEPS: usize = 64;

/// Checks `w_m ≠ 0`, `det A(w_m) ≠ 0` and `a(w_m) ≠ 0` for every iterate.
///
/// Stored iterates are checked one by one. The infinite tail is certified
/// at once when every nonzero root of `u·det A·a` (with `p = z^δ u/v`) has
/// modulus above `|w_M|·(1 + 2^-8)`, since later iterates never leave
/// `|z| ≤ |w_M|`. If the root bound is too small the orbit is extended
/// until it fits.
pub fn check_hypotheses(ms: &MahlerSystem, orbit: &OrbitCertificate) -> Result<HypothesisReport> {
    if ms.p() != orbit.p() {
        return Err(Error::InvalidArgument("orbit was computed for a different map".into()));
    }
    let det = ms.det_matrix();
    let mut report = HypothesisReport {
        orbit: orbit.clone(),
        nonzero_ok: true,
        det_a_ok: true,
        a_ok: true,
        failing_index: None,
    };
    if det.is_zero() {
        report.det_a_ok = false;
        report.failing_index = Some(0);
        return Ok(report);
    }
    let prec = orbit.prec();
    let check = |report: &mut HypothesisReport, m: usize| -> Result<bool> {
        let w = &report.orbit.iterates()[m];
        let nonzero = w.zero_status().map(|z| !z).ok_or(Error::Inconclusive(m))?;
        let det_ok = w.poly_nonzero(&det, prec).ok_or(Error::Inconclusive(m))?;
        let a_ok = w.poly_nonzero(ms.a(), prec).ok_or(Error::Inconclusive(m))?;
        report.nonzero_ok &= nonzero;
        report.det_a_ok &= det_ok;
        report.a_ok &= a_ok;
        if nonzero && det_ok && a_ok {
            Ok(true)
        } else {
            report.failing_index = Some(m);
            Ok(false)
        }
    };
    for m in 0..=orbit.m() {
        if !check(&mut report, m)? {
            return Ok(report);
        }
    }

    let delta = orbit.p().ord_zero().expect("basin certified");
    let u = orbit.p().num().shift_down(delta);
    let bound = [&u, &det, ms.a()]
        .into_iter()
        .filter_map(Polynomial::nonzero_root_modulus_lower_bound)
        .min();
    let Some(bound) = bound else {
        return Ok(report);
    };
    let inner = strictly_inside(&bound);
    for _ in 0..=MAX_TAIL_STEPS {
        if report.orbit.last().abs_at_most(&inner) {
            return Ok(report);
        }
        report.orbit.extend(1)?;
        let m = report.orbit.m();
        if !check(&mut report, m)? {
            return Ok(report);
        }
    }
    Err(Error::Inconclusive(report.orbit.m()))
}
