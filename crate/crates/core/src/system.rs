//! Functional-equation systems `a(z)·f(z) = A(z)·f(p(z)) + B(z)` and their
//! diagonal special case `χ_i(z) = χ_i(p(z)) + q_i(z)`.

use num_traits::Zero;

use crate::algebra::linalg::{self, Matrix};
use crate::algebra::{Polynomial, PowerSeries, Rational, RationalFunction};
use crate::error::{Error, Result};

/// `a(z)·f(z) = A(z)·f(p(z)) + B(z)` for a vector `f` of `n` unknown series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MahlerSystem {
    p: RationalFunction,
    a: Polynomial,
    matrix: Vec<Vec<Polynomial>>,
    rhs: Vec<Polynomial>,
}

impl MahlerSystem {
    /// Checks shapes, `a ≠ 0` and `p(0) = 0`. The order condition `ord p ≥ 2`
    /// is only enforced by [`solve_series`].
    pub fn new(p: RationalFunction, a: Polynomial, matrix: Vec<Vec<Polynomial>>, rhs: Vec<Polynomial>) -> Result<Self> {
        let n = rhs.len();
        if n == 0 {
            return Err(Error::InvalidSystem("n must be positive".into()));
        }
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSystem(format!("A must be {n}×{n}")));
        }
        if a.is_zero() {
            return Err(Error::InvalidSystem("a must be nonzero".into()));
        }
        check_map(&p)?;
        Ok(MahlerSystem { p, a, matrix, rhs })
    }

    pub fn n(&self) -> usize {
        self.rhs.len()
    }

    pub fn p(&self) -> &RationalFunction {
        &self.p
    }

    pub fn a(&self) -> &Polynomial {
        &self.a
    }

    pub fn matrix(&self) -> &[Vec<Polynomial>] {
        &self.matrix
    }

    pub fn rhs(&self) -> &[Polynomial] {
        &self.rhs
    }

    /// Whether `ord p ≥ 2`, the order condition the series solver needs.
    pub fn order_ok(&self) -> bool {
        self.p.ord_zero().is_some_and(|d| d >= 2)
    }

    pub fn det_matrix(&self) -> Polynomial {
        linalg::poly_determinant(&self.matrix).expect("square by construction")
    }

    /// `a` constant and `A` constant diagonal.
    pub fn is_constant_diagonal(&self) -> bool {
        self.a.is_constant()
            && self.matrix.iter().enumerate().all(|(i, row)| {
                row.iter().enumerate().all(|(j, e)| if i == j { e.is_constant() } else { e.is_zero() })
            })
    }
}

fn check_map(p: &RationalFunction) -> Result<()> {
    if p.num().is_zero() {
        return Err(Error::InvalidSystem("p must not be identically zero".into()));
    }
    if !p.num().coeff(0).is_zero() {
        return Err(Error::InvalidSystem("p(0) must be 0".into()));
    }
    Ok(())
}

/// `χ_i(z) = χ_i(p(z)) + q_i(z)`, `i = 1..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagonalSystem {
    p: RationalFunction,
    q: Vec<Polynomial>,
}

impl DiagonalSystem {
    /// Requires `q_i(0) = 0`, `deg q_i ≥ 1`, `p(0) = 0` and `ord p ≥ 2`.
    pub fn new(p: RationalFunction, q: Vec<Polynomial>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidSystem("n must be positive".into()));
        }
        check_map(&p)?;
        let delta = p.ord_zero().expect("p nonzero");
        if delta < 2 {
            return Err(Error::OrderTooSmall(delta));
        }
        for (i, qi) in q.iter().enumerate() {
            if qi.degree().unwrap_or(0) < 1 {
                return Err(Error::InvalidSystem(format!("q_{} must have degree at least 1", i + 1)));
            }
            if !qi.coeff(0).is_zero() {
                return Err(Error::InvalidSystem(format!("q_{}(0) must be 0", i + 1)));
            }
        }
        Ok(DiagonalSystem { p, q })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn p(&self) -> &RationalFunction {
        &self.p
    }

    pub fn q(&self) -> &[Polynomial] {
        &self.q
    }

    /// The same equations written as `1·f = I·f(p) + (q_1, …, q_n)`.
    pub fn to_mahler_system(&self) -> MahlerSystem {
        let n = self.n();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Polynomial::one() } else { Polynomial::zero() }).collect())
            .collect();
        MahlerSystem { p: self.p.clone(), a: Polynomial::one(), matrix, rhs: self.q.clone() }
    }
}

/// Solution vector of power series, exact modulo `z^{N+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesSolution {
    pub series: Vec<PowerSeries>,
    pub order: usize,
}

impl SeriesSolution {
    pub fn truncate(&self, order: usize) -> SeriesSolution {
        SeriesSolution { series: self.series.iter().map(|s| s.truncate(order)).collect(), order }
    }
}

/// Solves the system coefficientwise to order `N`.
///
/// The constant terms solve `(a(0)·I − A(0))·f_0 = B(0)`. When that matrix
/// is singular but the equation is consistent (diagonal systems are the
/// typical case: `a = 1`, `A = I`) the free coordinates of `f_0` are set to
/// zero, which picks the solution vanishing at 0 there. For `k ≥ 1` the
/// coefficient of `z^k` in `a·f − A·(f∘p) − B` involves `f_k` only through
/// `a(0)·f_k`, because `f_j` enters `f∘p` no earlier than `z^{δj}` and
/// `δ ≥ 2`.
pub fn solve_series(ms: &MahlerSystem, order: usize) -> Result<SeriesSolution> {
    let n = ms.n();
    let delta = ms.p.ord_zero().unwrap_or(usize::MAX);
    if delta < 2 {
        return Err(Error::NotSolvable(format!("ord p = {delta} < 2 makes the recursion circular")));
    }
    let a0 = ms.a.coeff(0);
    if a0.is_zero() {
        return Err(Error::NotSolvable("a(0) = 0".into()));
    }
    let mut m0: Matrix = vec![vec![Rational::zero(); n]; n];
    for (i, row) in m0.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = -ms.matrix[i][j].coeff(0);
            if i == j {
                *x += &a0;
            }
        }
    }
    let b0: Vec<Rational> = ms.rhs.iter().map(|b| b.coeff(0)).collect();
    let f0 = linalg::solve_particular(&m0, &b0)
        .ok_or_else(|| Error::NotSolvable("(a(0)·I − A(0))·f(0) = B(0) is inconsistent".into()))?;

    let inv_a0 = a0.recip();
    let mut coeffs: Vec<Vec<Rational>> = vec![f0.clone()];
    // comp[m] = coefficient of z^m in f∘p, accumulated as each f_j becomes known.
    let mut comp: Vec<Vec<Rational>> = vec![vec![Rational::zero(); n]; order + 1];
    comp[0] = f0;
    let mut power = PowerSeries::from_polynomial(&Polynomial::one(), order);
    let mat_deg = ms.matrix.iter().flatten().filter_map(Polynomial::degree).max().unwrap_or(0);
    for k in 1..=order {
        let mut acc: Vec<Rational> = ms.rhs.iter().map(|b| b.coeff(k)).collect();
        for (j, aj) in ms.a.coeffs().iter().enumerate().skip(1).take(k) {
            if aj.is_zero() {
                continue;
            }
            for (x, f) in acc.iter_mut().zip(&coeffs[k - j]) {
                *x -= aj * f;
            }
        }
        for j in 0..=mat_deg.min(k) {
            let c = &comp[k - j];
            if c.iter().all(Zero::is_zero) {
                continue;
            }
            for (i, x) in acc.iter_mut().enumerate() {
                for (l, cl) in c.iter().enumerate() {
                    let e = ms.matrix[i][l].coeff(j);
                    if !e.is_zero() && !cl.is_zero() {
                        *x += e * cl;
                    }
                }
            }
        }
        let fk: Vec<Rational> = acc.into_iter().map(|x| x * &inv_a0).collect();
        // f_k · p^k contributes from z^{δk} on.
        if k.saturating_mul(delta) <= order {
            power = power.mul_div_poly(ms.p.num(), ms.p.den())?;
            for (m, pm) in power.coeffs().iter().enumerate().skip(k * delta) {
                if pm.is_zero() {
                    continue;
                }
                for (x, f) in comp[m].iter_mut().zip(&fk) {
                    *x += pm * f;
                }
            }
        }
        coeffs.push(fk);
    }
    let series = (0..n).map(|i| PowerSeries::new(coeffs.iter().map(|c| c[i].clone()).collect())).collect();
    Ok(SeriesSolution { series, order })
}

/// `χ_i = Σ_{m≥0} q_i(p^[m](z))` truncated at `z^N`; the sum is finite at
/// every fixed order because `ord p^[m] = δ^m`.
pub fn explicit_diagonal_series(ds: &DiagonalSystem, order: usize) -> SeriesSolution {
    let mut sums = Vec::with_capacity(ds.n());
    for q in &ds.q {
        // term = q∘p^[m]; its order at 0 grows like δ^m.
        let mut term = PowerSeries::from_polynomial(q, order);
        let mut sum = term.clone();
        loop {
            term = term.compose_rational(&ds.p).expect("p(0) = 0 for a Mahler map");
            if term.is_zero() {
                break;
            }
            sum = &sum + &term;
        }
        sums.push(sum);
    }
    SeriesSolution { series: sums, order }
}

/// `a·f − A·(f∘p) − B`, truncated at `z^N`.
pub fn residual(ms: &MahlerSystem, sol: &SeriesSolution, order: usize) -> Result<Vec<PowerSeries>> {
    if sol.order < order || sol.series.len() != ms.n() {
        return Err(Error::InvalidArgument("solution does not match the system or order".into()));
    }
    let f: Vec<PowerSeries> = sol.series.iter().map(|s| s.truncate(order)).collect();
    let composed: Vec<PowerSeries> = f.iter().map(|s| s.compose_rational(&ms.p)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(ms.n());
    for i in 0..ms.n() {
        let mut r = f[i].mul_poly(&ms.a);
        for (l, c) in composed.iter().enumerate() {
            r = &r - &c.mul_poly(&ms.matrix[i][l]);
        }
        r = &r - &PowerSeries::from_polynomial(&ms.rhs[i], order);
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use crate::algebra::rational::{int, rat};

    fn poly(c: &[i64]) -> Polynomial {
        Polynomial::from_ints(c)
    }

    fn map(c: &[i64]) -> RationalFunction {
        RationalFunction::from_polynomial(poly(c))
    }

    fn monomials(exps: &[usize], order: usize) -> PowerSeries {
        let mut s = PowerSeries::zero(order);
        for &e in exps {
            s.set_coeff(e, Rational::one());
        }
        s
    }

    #[test]
    fn diagonal_unfolds_to_identity_system() {
        let ds = DiagonalSystem::new(map(&[0, 0, 1]), vec![poly(&[0, 1])]).unwrap();
        let ms = ds.to_mahler_system();
        assert_eq!(ms.a(), &Polynomial::one());
        assert_eq!(ms.matrix(), &[vec![Polynomial::one()]]);
        assert_eq!(ms.rhs(), &[poly(&[0, 1])]);

        let ds = DiagonalSystem::new(map(&[0, 0, 0, 1]), vec![poly(&[0, 1]), poly(&[0, 0, 1])]).unwrap();
        let ms = ds.to_mahler_system();
        assert_eq!(ms.matrix()[0], vec![Polynomial::one(), Polynomial::zero()]);
        assert_eq!(ms.matrix()[1], vec![Polynomial::zero(), Polynomial::one()]);
        assert_eq!(ms.rhs(), &[poly(&[0, 1]), poly(&[0, 0, 1])]);
    }

    #[test]
    fn diagonal_validation() {
        assert!(DiagonalSystem::new(map(&[0, 1]), vec![poly(&[0, 1])]).is_err());
        assert!(DiagonalSystem::new(map(&[0, 0, 1]), vec![poly(&[1, 1])]).is_err());
        assert!(DiagonalSystem::new(map(&[0, 0, 1]), vec![poly(&[0])]).is_err());
        assert!(DiagonalSystem::new(map(&[1, 0, 1]), vec![poly(&[0, 1])]).is_err());
        assert!(DiagonalSystem::new(map(&[0, 0, 1]), vec![]).is_err());
    }

    #[test]
    fn square_map_with_identity_forcing() {
        let ds = DiagonalSystem::new(map(&[0, 0, 1]), vec![poly(&[0, 1])]).unwrap();
        let sol = solve_series(&ds.to_mahler_system(), 8).unwrap();
        assert_eq!(sol.series[0], monomials(&[1, 2, 4, 8], 8));
        let ex = explicit_diagonal_series(&ds, 16);
        assert_eq!(ex.series[0], monomials(&[1, 2, 4, 8, 16], 16));
    }

    #[test]
    fn cube_map_explicit() {
        let ds = DiagonalSystem::new(map(&[0, 0, 0, 1]), vec![poly(&[0, 1])]).unwrap();
        assert_eq!(explicit_diagonal_series(&ds, 9).series[0], monomials(&[1, 3, 9], 9));
    }

    #[test]
    fn order_zero_truncation_is_zero() {
        let ds = DiagonalSystem::new(map(&[0, 0, 1, 1]), vec![poly(&[0, 2, 1]), poly(&[0, 0, 5])]).unwrap();
        let ex = explicit_diagonal_series(&ds, 0);
        assert!(ex.series.iter().all(PowerSeries::is_zero));
        assert_eq!(ex, solve_series(&ds.to_mahler_system(), 0).unwrap());
    }

    #[test]
    fn order_one_map_is_not_solvable() {
        let ms = MahlerSystem::new(map(&[0, 1]), Polynomial::one(), vec![vec![Polynomial::one()]], vec![poly(&[0, 1])])
            .unwrap();
        assert!(matches!(solve_series(&ms, 8), Err(Error::NotSolvable(_))));
        assert!(!ms.order_ok());
    }

    #[test]
    fn inconsistent_constant_system_is_not_solvable() {
        // a = 1, A = [[1]], B = 1: (1 − 1) f_0 = 1 has no solution.
        let ms = MahlerSystem::new(map(&[0, 0, 1]), Polynomial::one(), vec![vec![Polynomial::one()]], vec![poly(&[1])])
            .unwrap();
        assert!(matches!(solve_series(&ms, 4), Err(Error::NotSolvable(_))));
        let ms = MahlerSystem::new(map(&[0, 0, 1]), poly(&[0, 1]), vec![vec![Polynomial::one()]], vec![poly(&[0, 1])])
            .unwrap();
        assert!(matches!(solve_series(&ms, 4), Err(Error::NotSolvable(_))));
    }

    #[test]
    fn scalar_half_system_residual() {
        // 2 f(z) = f(z^2) + z: f_0 = 0, f = z/2 + z^2/4 + z^4/8 + ...
        let ms = MahlerSystem::new(map(&[0, 0, 1]), poly(&[2]), vec![vec![Polynomial::one()]], vec![poly(&[0, 1])])
            .unwrap();
        let sol = solve_series(&ms, 4).unwrap();
        assert!(residual(&ms, &sol, 4).unwrap().iter().all(PowerSeries::is_zero));
        assert_eq!(sol.series[0].coeff(0), int(0));
        assert_eq!(sol.series[0].coeff(1), rat(1, 2));
        assert_eq!(sol.series[0].coeff(2), rat(1, 4));
    }

    #[test]
    fn residual_of_wrong_candidate() {
        // χ = z for χ(z) = χ(z^2) + z leaves z − z^2 − z = −z^2.
        let ds = DiagonalSystem::new(map(&[0, 0, 1]), vec![poly(&[0, 1])]).unwrap();
        let cand = SeriesSolution { series: vec![monomials(&[1], 2)], order: 2 };
        let r = residual(&ds.to_mahler_system(), &cand, 2).unwrap();
        assert_eq!(r[0], PowerSeries::new(vec![int(0), int(0), int(-1)]));
    }

    #[test]
    fn perturbation_breaks_residual() {
        let ds = DiagonalSystem::new(map(&[0, 0, 1, -1]), vec![poly(&[0, 1, 3])]).unwrap();
        let ms = ds.to_mahler_system();
        let sol = solve_series(&ms, 20).unwrap();
        assert!(residual(&ms, &sol, 20).unwrap().iter().all(PowerSeries::is_zero));
        // The constant term of a diagonal solution is free; all others are forced.
        for k in 1..=20 {
            let mut bad = sol.clone();
            let c = bad.series[0].coeff(k) + int(1);
            bad.series[0].set_coeff(k, c);
            assert!(residual(&ms, &bad, 20).unwrap().iter().any(|r| !r.is_zero()), "k = {k}");
        }
    }

    #[test]
    fn invertible_system_forces_constant_term() {
        // 3 f = f(z^2) + (1 + z): f(0) = 1/2 is forced.
        let ms = MahlerSystem::new(map(&[0, 0, 1]), poly(&[3]), vec![vec![Polynomial::one()]], vec![poly(&[1, 1])])
            .unwrap();
        let sol = solve_series(&ms, 10).unwrap();
        assert_eq!(sol.series[0].coeff(0), rat(1, 2));
        for k in 0..=10 {
            let mut bad = sol.clone();
            let c = bad.series[0].coeff(k) + int(1);
            bad.series[0].set_coeff(k, c);
            assert!(residual(&ms, &bad, 10).unwrap().iter().any(|r| !r.is_zero()), "k = {k}");
        }
    }

    #[test]
    fn rational_map_solver_matches_explicit() {
        // p = z^2 / (1 − z)
        let p = RationalFunction::new(poly(&[0, 0, 1]), poly(&[1, -1])).unwrap();
        let ds = DiagonalSystem::new(p, vec![poly(&[0, 1, -2]), poly(&[0, 0, 0, 1])]).unwrap();
        let ms = ds.to_mahler_system();
        let sol = solve_series(&ms, 40).unwrap();
        assert_eq!(sol, explicit_diagonal_series(&ds, 40));
        assert!(residual(&ms, &sol, 40).unwrap().iter().all(PowerSeries::is_zero));
    }
}
