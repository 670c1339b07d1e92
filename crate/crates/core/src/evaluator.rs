//! Enclosures of solution values `f_i(y)` obtained by unrolling the
//! functional equation along the orbit of `y`.

use num_traits::{One, Signed, Zero};

use crate::algebra::{Ball, Dyadic, Polynomial, Rational, Round};
use crate::error::{Error, Result};
use crate::orbit::{check_hypotheses, Iterate, OrbitCertificate};
use crate::system::{solve_series, DiagonalSystem, MahlerSystem};

/// Upper limit for the automatic precision increase.
pub const MAX_PRECISION: u32 = 1 << 16;

/// Bound on the extra orbit steps spent on shrinking a tail.
const MAX_EXTRA_STEPS: usize = 64;

/// Safety factor `2^10` for the heuristic series truncation estimate.
const HEURISTIC_SAFETY_LOG2: i64 = 10;

/// `max(256, 4·⌈log2(1/tol)⌉)` bits.
pub fn default_precision(tol: &Rational) -> u32 {
    let inv = tol.recip();
    let lg = Dyadic::from_rational(&inv, 64, Round::Up).mag().unwrap_or(0).max(0);
    (4 * lg).clamp(256, i64::from(MAX_PRECISION)) as u32
}

fn check_tol(tol: &Rational) -> Result<()> {
    if tol.is_positive() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("tolerance must be positive".into()))
    }
}

/// `χ_i(y)` for every component of a diagonal system, each ball of radius
/// at most `tol`.
///
/// Sums `q_i(w_m)` for `m ≤ M + J` and adds the tail bound
/// `L_i·|w_{M+J}|·λ/(1−λ)` with `L_i = Σ_k |q_{i,k}| r^{k−1}`. Precision
/// starts at [`default_precision`] and doubles up to [`MAX_PRECISION`].
pub fn eval_diagonal(ds: &DiagonalSystem, orbit: &OrbitCertificate, tol: &Rational) -> Result<Vec<Ball>> {
    if ds.p() != orbit.p() {
        return Err(Error::InvalidArgument("orbit was computed for a different map".into()));
    }
    let terms: Vec<WeightedTerm> = ds
        .q()
        .iter()
        .map(|q| WeightedTerm { weight: Rational::one(), poly: q.clone(), offset: Rational::zero() })
        .collect();
    weighted_orbit_sum(&terms, orbit, tol)
}

/// `offset + Σ_m weight^m · poly(w_m)` with `poly(0) = 0` and
/// `|weight|·λ < 1`.
struct WeightedTerm {
    weight: Rational,
    poly: Polynomial,
    offset: Rational,
}

fn weighted_orbit_sum(terms: &[WeightedTerm], orbit: &OrbitCertificate, tol: &Rational) -> Result<Vec<Ball>> {
    check_tol(tol)?;
    let r = orbit.basin_radius();
    let lambda = orbit.contraction();
    // |Σ_{j≥1} β^{K+j} g(w_{K+j})| ≤ |β|^K · L·|w_K| · |β|λ/(1 − |β|λ).
    let tail_factors: Vec<(Rational, Rational)> = terms
        .iter()
        .map(|t| {
            let b = t.weight.abs();
            let bl = &b * lambda;
            assert!(bl < Rational::one(), "weight too large for the contraction");
            let lip = t.poly.shift_down(1).abs_bound(r);
            (b, lip * &bl / (Rational::one() - bl))
        })
        .collect();
    let half_tol = tol / Rational::from_integer(2.into());

    let mut prec = default_precision(tol).max(orbit.prec());
    loop {
        let mut o = if prec == orbit.prec() { orbit.clone() } else { orbit.with_prec(prec)? };
        // K = M + J: the first index where every tail bound is ≤ tol/2.
        let mut extra = 0;
        let tails = loop {
            let k = o.m();
            let w = o.last().abs_upper().to_rational();
            let tails: Vec<Rational> = tail_factors.iter().map(|(b, f)| pow(b, k) * f * &w).collect();
            if tails.iter().all(|t| *t <= half_tol) || extra == MAX_EXTRA_STEPS {
                break tails;
            }
            o.extend(1)?;
            extra += 1;
        };
        let mut out = Vec::with_capacity(terms.len());
        for (t, tail) in terms.iter().zip(&tails) {
            let mut exact = t.offset.clone();
            let mut approx = Ball::zero(prec);
            let mut wp = Rational::one();
            for w in o.iterates() {
                match w {
                    Iterate::Exact(q) => exact += &wp * t.poly.eval(q),
                    Iterate::Approx(b) => {
                        approx = &approx + &(&Ball::from_rational(&wp, prec) * &t.poly.eval_ball(&b.with_prec(prec)));
                    }
                }
                wp *= &t.weight;
            }
            let sum = &Ball::from_rational(&exact, prec) + &approx;
            out.push(sum.add_error(&Dyadic::from_rational(tail, 64, Round::Up)));
        }
        let tol_d = Dyadic::from_rational(tol, 64, Round::Down);
        if out.iter().all(|b| *b.rad() <= tol_d) {
            return Ok(out);
        }
        if prec >= MAX_PRECISION {
            return Err(Error::PrecisionExhausted(MAX_PRECISION));
        }
        prec = (prec * 2).min(MAX_PRECISION);
    }
}

fn pow(q: &Rational, k: usize) -> Rational {
    (0..k).fold(Rational::one(), |acc, _| acc * q)
}

/// Values of a general system together with whether their radii are
/// rigorous.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralValues {
    pub values: Vec<Ball>,
    pub certified: bool,
}

/// `f_i(y)` for a general system.
///
/// When `a` is constant and `A` constant diagonal (`f_i = β_i f_i∘p + b_i`)
/// with `|β_i|·λ < 1`, the unrolled sum has a rigorous tail bound and the
/// result is certified. Otherwise `f(w_m) = a(w_m)^{-1}(A(w_m) f(w_{m+1}) +
/// B(w_m))` is run backward from `f(w_K) ≈ S_{2N}(w_K)`, where `S_N` is the
/// series truncated at order `N`, with error `2^10·|S_{2N} − S_N|(w_K)`;
/// that estimate is heuristic and the result is not certified.
pub fn eval_general(ms: &MahlerSystem, orbit: &OrbitCertificate, order: usize, tol: &Rational) -> Result<GeneralValues> {
    check_tol(tol)?;
    let report = check_hypotheses(ms, orbit)?;
    if !report.a_ok {
        return Err(Error::HypothesisViolated(report.failing_index.unwrap_or(0)));
    }
    let orbit = report.orbit;
    if let Some(terms) = certified_terms(ms, &orbit)? {
        let values = weighted_orbit_sum(&terms, &orbit, tol)?;
        return Ok(GeneralValues { values, certified: true });
    }
    let sol = solve_series(ms, 2 * order)?;
    let low = sol.truncate(order);
    let mut prec = default_precision(tol).max(orbit.prec());
    loop {
        let mut o = if prec == orbit.prec() { orbit.clone() } else { orbit.with_prec(prec)? };
        for _ in 0..=MAX_EXTRA_STEPS {
            let values = backward(ms, &o, &sol.series, &low.series, prec)?;
            let tol_d = Dyadic::from_rational(tol, 64, Round::Down);
            if values.iter().all(|b| *b.rad() <= tol_d) {
                return Ok(GeneralValues { values, certified: false });
            }
            o.extend(1)?;
        }
        if prec >= MAX_PRECISION {
            return Err(Error::PrecisionExhausted(MAX_PRECISION));
        }
        prec = (prec * 2).min(MAX_PRECISION);
    }
}

/// The certified decomposition `f_i = f_i(0) + Σ_m β_i^m (b_i − b_i(0))(w_m)`
/// when it applies.
fn certified_terms(ms: &MahlerSystem, orbit: &OrbitCertificate) -> Result<Option<Vec<WeightedTerm>>> {
    if !ms.is_constant_diagonal() {
        return Ok(None);
    }
    let c = ms.a().coeff(0);
    let mut terms = Vec::with_capacity(ms.n());
    for i in 0..ms.n() {
        let beta = ms.matrix()[i][i].coeff(0) / &c;
        if &beta.abs() * orbit.contraction() >= Rational::one() {
            return Ok(None);
        }
        let b = ms.rhs()[i].scale(&c.recip());
        let b0 = b.coeff(0);
        let offset = if beta.is_one() {
            if !b0.is_zero() {
                return Err(Error::NotSolvable(format!("component {} has no solution analytic at 0", i + 1)));
            }
            Rational::zero()
        } else {
            &b0 / (Rational::one() - &beta)
        };
        let poly = &b - &Polynomial::constant(b0);
        terms.push(WeightedTerm { weight: beta, poly, offset });
    }
    Ok(Some(terms))
}

fn backward(
    ms: &MahlerSystem,
    orbit: &OrbitCertificate,
    high: &[crate::algebra::PowerSeries],
    low: &[crate::algebra::PowerSeries],
    prec: u32,
) -> Result<Vec<Ball>> {
    let wk = orbit.last().to_ball(prec);
    let mut f: Vec<Ball> = high
        .iter()
        .zip(low)
        .map(|(h, l)| {
            let hv = h.eval_ball(&wk);
            let diff = (&hv - &l.eval_ball(&wk)).abs_upper().mul_2exp(HEURISTIC_SAFETY_LOG2);
            hv.add_error(&diff)
        })
        .collect();
    let n = ms.n();
    for w in orbit.iterates().iter().rev().skip(1) {
        let wb = w.to_ball(prec);
        let a = ms.a().eval_ball(&wb);
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = ms.rhs()[i].eval_ball(&wb);
            for (j, fj) in f.iter().enumerate() {
                let e = &ms.matrix()[i][j];
                if !e.is_zero() {
                    acc = &acc + &(&e.eval_ball(&wb) * fj);
                }
            }
            next.push(acc.div(&a)?);
        }
        f = next;
    }
    Ok(f)
}

/// Which projective point the values are assembled into.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointStyle {
    /// `(1 : f_1(y) : … : f_n(y))`
    Theorem1,
    /// `(1 : y : f_1(y) : … : f_n(y))`
    Theorem2,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluatedPoint {
    pub coords: Vec<Ball>,
    pub style: PointStyle,
    pub certified: bool,
}

pub fn make_point(values: &[Ball], style: PointStyle, y: Option<&Ball>, certified: bool) -> Result<EvaluatedPoint> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no values to assemble".into()));
    }
    let prec = values[0].prec();
    let mut coords = vec![Ball::one(prec)];
    if style == PointStyle::Theorem2 {
        let y = y.ok_or_else(|| Error::InvalidArgument("this point style needs y".into()))?;
        coords.push(y.clone());
    }
    coords.extend(values.iter().cloned());
    Ok(EvaluatedPoint { coords, style, certified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::{int, rat};
    use crate::algebra::RationalFunction;
    use crate::orbit::compute_orbit;
    use proptest::prelude::*;

    const CHI_HALF: &str = "0.816421509021893143708079737530525221703311375920552804341211";

    fn poly_map(c: &[i64]) -> RationalFunction {
        RationalFunction::from_polynomial(Polynomial::from_ints(c))
    }

    fn decimal(s: &str) -> Rational {
        crate::parse_rational(s).unwrap()
    }

    fn ten_pow(k: i32) -> Rational {
        Rational::from_integer(10.into()).pow(k)
    }

    fn diag(p: &[i64], qs: &[&[i64]]) -> DiagonalSystem {
        DiagonalSystem::new(poly_map(p), qs.iter().map(|q| Polynomial::from_ints(q)).collect()).unwrap()
    }

    #[test]
    fn default_precision_grows_with_tolerance() {
        assert_eq!(default_precision(&int(1)), 256);
        assert_eq!(default_precision(&ten_pow(-10)), 256);
        assert_eq!(default_precision(&ten_pow(-40)), 4 * 133);
        assert_eq!(default_precision(&ten_pow(-100)), 4 * 333);
    }

    #[test]
    fn chi_at_one_half() {
        let ds = diag(&[0, 0, 1], &[&[0, 1]]);
        let o = compute_orbit(ds.p(), &rat(1, 2), 64, 256).unwrap();
        let tol = ten_pow(-50);
        let v = eval_diagonal(&ds, &o, &tol).unwrap();
        assert!(v[0].rad().to_rational() <= tol);
        // The 60-digit oracle is within 10^-60 of the true value.
        let oracle = decimal(CHI_HALF);
        let slack = ten_pow(-60);
        assert!(v[0].add_error(&Dyadic::from_rational(&slack, 64, Round::Up)).contains_rational(&oracle));
    }

    #[test]
    fn huge_tolerance_still_encloses() {
        let ds = diag(&[0, 0, 1], &[&[0, 1]]);
        let o = compute_orbit(ds.p(), &rat(1, 2), 64, 256).unwrap();
        let v = eval_diagonal(&ds, &o, &int(1)).unwrap();
        assert!(v[0].contains_rational(&decimal(CHI_HALF)));
        assert_eq!(v[0].rad().to_rational(), rat(1, 2));
    }

    #[test]
    fn cubic_map_two_components() {
        let ds = diag(&[0, 0, 0, 1], &[&[0, 1], &[0, 0, 1]]);
        let o = compute_orbit(ds.p(), &rat(1, 2), 64, 256).unwrap();
        let v = eval_diagonal(&ds, &o, &ten_pow(-40)).unwrap();
        let slack = Dyadic::from_rational(&ten_pow(-59), 64, Round::Up);
        assert!(v[0].add_error(&slack).contains_rational(&decimal("0.626953132450580596923828538590306276513837435704346034981427")));
        assert!(v[1].add_error(&slack).contains_rational(&decimal("0.265628814697265680511151231257827021181583404541186681941446")));
    }

    #[test]
    fn telescoping_and_refinement() {
        let ds = diag(&[0, 0, 1, 1], &[&[0, 1, -2]]);
        let y = rat(2, 5);
        let o = compute_orbit(ds.p(), &y, 64, 256).unwrap();
        let py = ds.p().eval(&y).unwrap();
        let o1 = compute_orbit(ds.p(), &py, 64, 256).unwrap();
        let tol = ten_pow(-30);
        let direct = &eval_diagonal(&ds, &o, &tol).unwrap()[0];
        let stepped = &eval_diagonal(&ds, &o1, &tol).unwrap()[0] + &Ball::from_rational(&ds.q()[0].eval(&y), 256);
        assert!(direct.overlaps(&stepped));
        let mut prev = direct.clone();
        for k in [40, 60, 80] {
            let next = eval_diagonal(&ds, &o, &ten_pow(-k)).unwrap()[0].clone();
            assert!(next.overlaps(&prev));
            prev = next;
        }
    }

    #[test]
    fn general_route_agrees_with_diagonal() {
        let ds = diag(&[0, 0, 1], &[&[0, 1]]);
        let o = compute_orbit(ds.p(), &rat(1, 2), 64, 256).unwrap();
        let tol = ten_pow(-40);
        let d = eval_diagonal(&ds, &o, &tol).unwrap();
        let g = eval_general(&ds.to_mahler_system(), &o, 200, &tol).unwrap();
        assert!(g.certified);
        assert!(d[0].overlaps(&g.values[0]));
    }

    #[test]
    fn heuristic_route_is_self_consistent() {
        // 2f = f(z^2) + z; A is constant diagonal, so force the backward
        // route with a non-constant a: (2 + z) f = f(z^2) + z.
        let p = poly_map(&[0, 0, 1]);
        let ms = MahlerSystem::new(p.clone(), Polynomial::from_ints(&[2, 1]), vec![vec![Polynomial::one()]], vec![Polynomial::z()])
            .unwrap();
        let o = compute_orbit(&p, &rat(1, 2), 64, 256).unwrap();
        let tol = ten_pow(-30);
        let a = eval_general(&ms, &o, 100, &tol).unwrap();
        assert!(!a.certified);
        let b = eval_general(&ms, &o.with_prec(512).unwrap(), 200, &tol).unwrap();
        assert!(a.values[0].overlaps(&b.values[0]));
        // The solution also satisfies the equation at y = 1/2 to within the radii.
        let sol = solve_series(&ms, 400).unwrap();
        let direct = sol.series[0].eval_ball(&Ball::from_rational(&rat(1, 2), 256));
        assert!((&direct - &a.values[0]).abs_upper().to_rational() < ten_pow(-20));
    }

    #[test]
    fn constant_a_with_certified_weights() {
        // 2f = f(z^2) + z: f = Σ z^{2^m} / 2^{m+1}.
        let p = poly_map(&[0, 0, 1]);
        let ms = MahlerSystem::new(p.clone(), Polynomial::from_ints(&[2]), vec![vec![Polynomial::one()]], vec![Polynomial::z()])
            .unwrap();
        let o = compute_orbit(&p, &rat(1, 2), 64, 256).unwrap();
        let g = eval_general(&ms, &o, 100, &ten_pow(-40)).unwrap();
        assert!(g.certified);
        let oracle: Rational = (0..10u32).map(|m| rat(1, 2).pow(2i32.pow(m)) / Rational::from_integer(2.into()).pow(m as i32 + 1)).sum();
        assert!(g.values[0].add_error(&Dyadic::pow2(-1000)).contains_rational(&oracle));
    }

    #[test]
    fn a_vanishing_on_orbit_is_a_violation() {
        let p = poly_map(&[0, 0, 1]);
        let a = Polynomial::new(vec![rat(-1, 4), int(1)]);
        let ms = MahlerSystem::new(p.clone(), a, vec![vec![Polynomial::one()]], vec![Polynomial::z()]).unwrap();
        let o = compute_orbit(&p, &rat(1, 2), 64, 256).unwrap();
        assert_eq!(eval_general(&ms, &o, 50, &ten_pow(-20)), Err(Error::HypothesisViolated(1)));
    }

    #[test]
    fn point_assembly() {
        let v = vec![Ball::from_rational(&decimal("0.81642"), 64)];
        let pt = make_point(&v, PointStyle::Theorem1, None, true).unwrap();
        assert_eq!(pt.coords.len(), 2);
        assert_eq!(pt.coords[0], Ball::one(64));
        let y = Ball::from_rational(&rat(1, 2), 64);
        let pt = make_point(&v, PointStyle::Theorem2, Some(&y), true).unwrap();
        assert_eq!(pt.coords[1], y);
        assert!(make_point(&[], PointStyle::Theorem1, None, true).is_err());
        assert!(make_point(&v, PointStyle::Theorem2, None, true).is_err());
    }

    /// Partial sums in 512-bit balls until the terms drop below 10^-60.
    fn brute_force(ds: &DiagonalSystem, y: &Rational) -> Vec<Ball> {
        let prec = 512;
        let small = Dyadic::from_rational(&ten_pow(-60), 64, Round::Down);
        let mut w = Ball::from_rational(y, prec);
        let mut sums = vec![Ball::zero(prec); ds.n()];
        loop {
            let terms: Vec<Ball> = ds.q().iter().map(|q| q.eval_ball(&w)).collect();
            for (s, t) in sums.iter_mut().zip(&terms) {
                *s = &*s + t;
            }
            if terms.iter().all(|t| t.abs_upper() < small) {
                return sums;
            }
            w = ds.p().eval_ball(&w).unwrap();
        }
    }

    fn small_coeffs(len: usize) -> impl Strategy<Value = Vec<i64>> {
        prop::collection::vec(-3i64..=3, len)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn agrees_with_brute_force(
            delta in 2usize..=3,
            extra in small_coeffs(2),
            q1 in small_coeffs(4),
            q2 in small_coeffs(3),
            k in 1i64..=8,
            neg in any::<bool>(),
        ) {
            let mut pc = vec![0i64; delta];
            pc.push(1);
            pc.extend(extra);
            let q1: Vec<i64> = std::iter::once(0).chain(std::iter::once(1)).chain(q1).collect();
            let q2: Vec<i64> = std::iter::once(0).chain(q2).chain(std::iter::once(1)).collect();
            let ds = DiagonalSystem::new(poly_map(&pc), vec![Polynomial::from_ints(&q1), Polynomial::from_ints(&q2)]).unwrap();
            let (r, _) = crate::orbit::basin(ds.p()).unwrap();
            let y = &r * rat(if neg { -k } else { k }, 8);
            let o = compute_orbit(ds.p(), &y, 64, 256);
            prop_assume!(o.is_ok());
            let o = o.unwrap();
            let got = eval_diagonal(&ds, &o, &ten_pow(-40)).unwrap();
            let want = brute_force(&ds, &y);
            let slack = Dyadic::from_rational(&ten_pow(-58), 64, Round::Up);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!(g.overlaps(&w.add_error(&slack)));
            }
        }
    }
}
