//! Integer-relation search among real values through lattice reduction.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::lll::lll_reduce;
use crate::algebra::{Ball, Dyadic};
use crate::error::{Error, Result};

/// Number of reduced rows inspected as candidate relations.
const CANDIDATE_ROWS: usize = 5;
/// Guard bits for monomial evaluation before rounding into the lattice.
const GUARD_BITS: u32 = 64;
/// Largest lattice dimension accepted.
const MAX_MONOMIALS: usize = 200;

/// Integer polynomial in `n` variables, stored as sorted `(exponents, coefficient)` terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomial {
    nvars: usize,
    terms: Vec<(Vec<u32>, BigInt)>,
}

impl IntPolynomial {
    /// Drops zero coefficients and merges repeated monomials.
    pub fn new(nvars: usize, terms: Vec<(Vec<u32>, BigInt)>) -> Self {
        let mut terms: Vec<(Vec<u32>, BigInt)> = terms.into_iter().filter(|(e, _)| e.len() == nvars).collect();
        terms.sort_by(|a, b| monomial_order(&a.0, &b.0));
        let mut merged: Vec<(Vec<u32>, BigInt)> = Vec::with_capacity(terms.len());
        for (e, c) in terms {
            match merged.last_mut() {
                Some((le, lc)) if *le == e => *lc += c,
                _ => merged.push((e, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        IntPolynomial { nvars, terms: merged }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Terms from the leading monomial downward.
    pub fn terms(&self) -> &[(Vec<u32>, BigInt)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `0` for constants and the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    /// Largest absolute coefficient.
    pub fn height(&self) -> BigInt {
        self.terms.iter().map(|(_, c)| c.abs()).max().unwrap_or_else(BigInt::zero)
    }

    /// Divides by the content and makes the leading coefficient positive.
    pub fn normalized(&self) -> IntPolynomial {
        let g = self.terms.iter().fold(BigInt::zero(), |g, (_, c)| num_integer::Integer::gcd(&g, c));
        if g.is_zero() {
            return self.clone();
        }
        let g = if self.terms[0].1.is_negative() { -g } else { g };
        IntPolynomial { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), c / &g)).collect() }
    }

    /// Ball evaluation at `xs` with working precision `prec`.
    pub fn eval(&self, xs: &[Ball], prec: u32) -> Ball {
        assert_eq!(xs.len(), self.nvars, "wrong number of values");
        let xs: Vec<Ball> = xs.iter().map(|x| x.with_prec(prec)).collect();
        let mut acc = Ball::zero(prec);
        for (e, c) in &self.terms {
            let mut t = Ball::exact(Dyadic::from_bigint(c.clone()), prec);
            for (x, &k) in xs.iter().zip(e) {
                if k > 0 {
                    t = &t * &x.pow_u(k);
                }
            }
            acc = &acc + &t;
        }
        acc
    }
}

/// Graded order, leading monomial first: higher total degree, then
/// lexicographically larger exponent vector.
fn monomial_order(a: &[u32], b: &[u32]) -> std::cmp::Ordering {
    let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
    db.cmp(&da).then_with(|| b.cmp(a))
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mag = c.abs();
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| {
                    let name = if self.nvars == 1 { "X".to_string() } else { format!("X{}", j + 1) };
                    if k == 1 {
                        name
                    } else {
                        format!("{name}^{k}")
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else {
                if !mag.is_one() {
                    write!(f, "{mag}")?;
                }
                write!(f, "{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// All exponent vectors in `n` variables of total degree `≤ max_degree`,
/// constant first, then by increasing degree.
pub fn monomials(n: usize, max_degree: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max_degree, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| monomial_order(b, a));
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationQuery {
    pub values: Vec<Ball>,
    pub max_degree: u32,
    pub max_height: BigInt,
    pub precision_bits: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationDiagnostics {
    pub lattice_dim: usize,
    pub candidates_examined: usize,
    /// `log2` of the first reduced row's Euclidean norm.
    pub first_row_log2: f64,
    /// `log2 |b_1| − log2(vol L)/dim`, the root-Hermite slack of the reduction.
    pub hermite_log2: f64,
    /// Candidates within the height bound with `|P| < 2^{-b/4}` that failed
    /// the `2^{-3b/2}` check.
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationResult {
    pub found: Option<IntPolynomial>,
    /// `|P(x)|` for the returned relation, or for the best candidate when none.
    pub value_at_point: Option<Ball>,
    /// Smallest `ln|P(x)|` over the examined candidates (an upper estimate
    /// when the enclosure reaches zero); `+inf` when nothing was examined.
    pub best_log_abs: f64,
    pub diagnostics: RelationDiagnostics,
}

fn log2_norm(row: &[BigInt]) -> f64 {
    let sq: BigInt = row.iter().map(|x| x * x).sum();
    Dyadic::from_bigint(sq).to_log2_approx() / 2.0
}

fn ln_abs_estimate(b: &Ball) -> f64 {
    let v = if b.contains_zero() { b.abs_upper() } else { b.abs_lower() };
    v.to_log2_approx() * std::f64::consts::LN_2
}

/// Looks for a nonconstant `P ∈ Z[X_1..X_n]` with `deg P ≤ D`, height `≤ H`
/// and `P(values) ≈ 0`.
///
/// The lattice `[I | round(2^b·m_j)]` only sees the values to `2^{-b}`.
/// Radius `< 2^{-b/2}` is required to run it. A candidate is accepted when
/// `|P(values)| < 2^{-3b/2}` at `2b` bits, which needs values about that
/// sharp: a generic short vector only reaches `|P| ≈ 2^{-b}·|row|`, and
/// when `H^{dim} > 2^b` that is far below `2^{-b/4}`. Among accepted
/// candidates the lowest degree, then the lowest height, wins.
pub fn find_relation(q: &RelationQuery) -> Result<RelationResult> {
    let n = q.values.len();
    if n == 0 || q.max_degree == 0 || q.precision_bits < 8 || !q.max_height.is_positive() {
        return Err(Error::InvalidArgument("values must be nonempty and D, H, precision positive".into()));
    }
    let b = q.precision_bits;
    let limit = Dyadic::pow2(-i64::from(b / 2));
    if q.values.iter().any(|v| *v.rad() >= limit) {
        return Err(Error::PrecisionTooLow);
    }
    let monos = monomials(n, q.max_degree);
    if monos.len() > MAX_MONOMIALS {
        return Err(Error::InvalidArgument(format!("{} monomials exceed the limit {MAX_MONOMIALS}", monos.len())));
    }
    let dim = monos.len();
    let wp = b + GUARD_BITS;
    let xs: Vec<Ball> = q.values.iter().map(|v| v.with_prec(wp)).collect();
    let column: Vec<BigInt> = monos
        .iter()
        .map(|e| {
            let one = IntPolynomial { nvars: n, terms: vec![(e.clone(), BigInt::one())] };
            one.eval(&xs, wp).mid().mul_2exp(i64::from(b)).round_to_int()
        })
        .collect();
    let basis: Vec<Vec<BigInt>> = (0..dim)
        .map(|i| {
            let mut row = vec![BigInt::zero(); dim + 1];
            row[i] = BigInt::one();
            row[dim] = column[i].clone();
            row
        })
        .collect();
    let mut reduced = lll_reduce(&basis)?;

    let first_row_log2 = log2_norm(&reduced[0]);
    let vol_sq: BigInt = BigInt::one() + column.iter().map(|c| c * c).sum::<BigInt>();
    let hermite_log2 = first_row_log2 - Dyadic::from_bigint(vol_sq).to_log2_approx() / 2.0 / dim as f64;

    reduced.sort_by(|x, y| {
        let nx: BigInt = x.iter().map(|v| v * v).sum();
        let ny: BigInt = y.iter().map(|v| v * v).sum();
        nx.cmp(&ny)
    });
    let verify_prec = 2 * b;
    let threshold = Dyadic::pow2(-i64::from(3 * b / 2));
    let weak = Dyadic::pow2(-i64::from(b / 4));
    let mut rejected = 0;
    let mut best_log_abs = f64::INFINITY;
    let mut best_value: Option<Ball> = None;
    let mut examined = 0;
    let mut accepted: Vec<(IntPolynomial, Ball)> = Vec::new();
    for row in reduced.iter().take(CANDIDATE_ROWS) {
        let terms = monos.iter().cloned().zip(row[..dim].iter().cloned()).collect();
        let p = IntPolynomial::new(n, terms);
        if p.degree() == 0 {
            continue;
        }
        examined += 1;
        let value = p.eval(&q.values, verify_prec).abs();
        let l = ln_abs_estimate(&value);
        if l < best_log_abs {
            best_log_abs = l;
            best_value = Some(value.clone());
        }
        if p.height() <= q.max_height {
            if value.abs_upper() < threshold {
                accepted.push((p.normalized(), value));
            } else if value.abs_lower() < weak {
                rejected += 1;
            }
        }
    }
    accepted.sort_by(|(p1, _), (p2, _)| p1.degree().cmp(&p2.degree()).then_with(|| p1.height().cmp(&p2.height())));
    let (found, value_at_point) = match accepted.into_iter().next() {
        Some((p, v)) => (Some(p), Some(v)),
        None => (None, best_value),
    };
    Ok(RelationResult {
        found,
        value_at_point,
        best_log_abs,
        diagnostics: RelationDiagnostics { lattice_dim: dim, candidates_examined: examined, first_row_log2, hermite_log2, rejected },
    })
}
