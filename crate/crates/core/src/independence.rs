//! Decision procedure for algebraic independence of the solutions of a
//! diagonal system with polynomial `p`.
//!
//! `χ_1, …, χ_n` are algebraically independent over `C(z)` when
//! `1, q_1, …, q_n` are linearly independent and either
//!
//! * (a) `deg p` divides no `deg(Σ s_i q_i)` for `s ≠ 0`, or
//! * (b) no `Σ s_i χ_i` with `s ≠ 0` is a polynomial.
//!
//! Both conditions quantify over complex `s`. Every constraint system below
//! has rational coefficients, so it has a nonzero complex solution exactly
//! when it has a nonzero rational one; that is why rational linear algebra
//! decides them.

use num_traits::Zero;

use crate::algebra::linalg::{self, Matrix};
use crate::algebra::{Polynomial, Rational};
use crate::error::{Error, Result};
use crate::system::DiagonalSystem;

/// Whether `1, q_1, …, q_n` are linearly independent.
pub fn check_linear_independence(q: &[Polynomial]) -> bool {
    let width = q.iter().filter_map(Polynomial::degree).max().unwrap_or(0) + 1;
    let mut rows: Matrix = vec![row_of(&Polynomial::one(), width)];
    rows.extend(q.iter().map(|qi| row_of(qi, width)));
    linalg::rank(&rows) == q.len() + 1
}

fn row_of(p: &Polynomial, width: usize) -> Vec<Rational> {
    (0..width).map(|k| p.coeff(k)).collect()
}

/// Degrees attained by nonzero combinations `Σ s_i q_i`, ascending.
///
/// Row reduction with columns ordered from the highest degree down leaves
/// one pivot per attainable leading degree.
pub fn pivot_degrees(q: &[Polynomial]) -> Vec<usize> {
    let top = q.iter().filter_map(Polynomial::degree).max().unwrap_or(0);
    let mut rows: Matrix = q.iter().map(|qi| (0..=top).rev().map(|k| qi.coeff(k)).collect()).collect();
    let mut degs: Vec<usize> = linalg::rref(&mut rows).into_iter().map(|c| top - c).collect();
    degs.sort_unstable();
    degs
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConditionA {
    Holds { pivot_degrees: Vec<usize> },
    Fails { pivot_degrees: Vec<usize> },
}

impl ConditionA {
    pub fn holds(&self) -> bool {
        matches!(self, ConditionA::Holds { .. })
    }

    pub fn pivot_degrees(&self) -> &[usize] {
        match self {
            ConditionA::Holds { pivot_degrees } | ConditionA::Fails { pivot_degrees } => pivot_degrees,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConditionB {
    Holds,
    /// `Σ s_i χ_i = g` with `g(0) = 0`.
    Fails { s: Vec<Rational>, g: Polynomial },
    NotAttempted,
}

impl ConditionB {
    pub fn holds(&self) -> bool {
        matches!(self, ConditionB::Holds)
    }
}

fn polynomial_degree(ds: &DiagonalSystem) -> Result<(&Polynomial, usize)> {
    let p = ds.p().as_polynomial().ok_or(Error::NotPolynomial)?;
    let d = p.degree().unwrap_or(0);
    if d < 2 {
        return Err(Error::DegreeTooSmall(d));
    }
    Ok((p, d))
}

/// Condition (a): no attainable degree is a multiple of `deg p`.
pub fn check_condition_a(ds: &DiagonalSystem) -> Result<ConditionA> {
    let (_, d) = polynomial_degree(ds)?;
    let pivot_degrees = pivot_degrees(ds.q());
    if pivot_degrees.iter().any(|k| k % d == 0) {
        Ok(ConditionA::Fails { pivot_degrees })
    } else {
        Ok(ConditionA::Holds { pivot_degrees })
    }
}

/// Condition (b), decided exactly.
///
/// If `g = Σ s_i χ_i` is a polynomial then `g − g∘p = Σ s_i q_i`; for
/// nonconstant `g` the left side has degree `d·deg g`, so
/// `deg g ≤ e = ⌊max deg q_i / d⌋`. Conversely a polynomial solution `g` of
/// that equation with `g(0) = 0` equals `Σ s_i χ_i`, since their difference
/// `h` satisfies `h = h∘p`, `h(0) = 0`, which forces `h = 0` when
/// `ord p ≥ 2`. The condition fails iff the linear system in
/// `(s, g_0, …, g_e)` has a solution with `s ≠ 0`.
pub fn check_condition_b(ds: &DiagonalSystem) -> Result<ConditionB> {
    let (p, d) = polynomial_degree(ds)?;
    let n = ds.n();
    let maxdeg = ds.q().iter().filter_map(Polynomial::degree).max().unwrap_or(0);
    let e = maxdeg / d;
    let cols: Vec<Polynomial> = ds
        .q()
        .iter()
        .map(|qi| -qi)
        .chain((0..=e).map(|j| &Polynomial::monomial(Rational::from_integer(1.into()), j) - &p.pow(j as u32)))
        .collect();
    let height = maxdeg.max(d * e) + 1;
    let m: Matrix = (0..height).map(|k| cols.iter().map(|c| c.coeff(k)).collect()).collect();
    let kernel = linalg::kernel(&m, n + e + 1);
    match kernel.into_iter().find(|v| v[..n].iter().any(|x| !x.is_zero())) {
        None => Ok(ConditionB::Holds),
        Some(mut v) => {
            v[n] = Rational::zero();
            let g = Polynomial::new(v[n..].to_vec());
            v.truncate(n);
            Ok(ConditionB::Fails { s: v, g })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependenceCertificate {
    pub linear_ok: bool,
    pub condition_a: ConditionA,
    pub condition_b: ConditionB,
    /// `linear_ok ∧ (a ∨ b)`: the solutions are algebraically independent
    /// over `C(z)`.
    pub conclusion: bool,
}

pub fn certify(ds: &DiagonalSystem) -> Result<IndependenceCertificate> {
    let linear_ok = check_linear_independence(ds.q());
    let condition_a = check_condition_a(ds)?;
    let condition_b = if linear_ok { check_condition_b(ds)? } else { ConditionB::NotAttempted };
    let conclusion = linear_ok && (condition_a.holds() || condition_b.holds());
    Ok(IndependenceCertificate { linear_ok, condition_a, condition_b, conclusion })
}
