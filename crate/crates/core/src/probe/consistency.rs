//! Empirical check of `log|P(x)| ≥ −C·(h + d^a)^b·d^c + d·log‖x‖ + h` over
//! random integer polynomials.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::relation::{monomials, IntPolynomial};
use crate::algebra::{Ball, Dyadic};
use crate::bounds::{max_norm, ExponentReport};
use crate::error::{Error, Result};

/// Working precision for logarithms and the shape; results are reported as `f64`.
const SHAPE_PREC: u32 = 128;

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterPoint {
    pub degree: u32,
    pub height: BigInt,
    /// `(h + d^inner)^bracket · d^degree_exp` at the midpoint.
    pub shape: f64,
    /// `ln|P(x)|`; `-inf` when the enclosure reaches zero.
    pub log_abs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub seed: u64,
    pub trials: usize,
    /// Whether the whole sample space was enumerated instead of sampled.
    pub exhaustive: bool,
    /// Smallest `C ≥ 0` meeting every sample; `Some(inf)` when a sample may
    /// vanish at the point, `None` for an empty run.
    pub fitted_c: Option<f64>,
    /// Samples whose `|P(x)|` enclosure contains zero, so no finite `C` fits.
    pub violations: usize,
    /// Sorted by shape, then by `ln|P(x)|`.
    pub scatter: Vec<ScatterPoint>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.violations == 0
    }
}

/// Samples `trials` nonconstant polynomials with `deg ≤ max_degree` and
/// coefficients in `[−H, H]`, or enumerates all of them when there are no
/// more than `trials`.
///
/// `report` must be admissible with `k = n − 1`, where `n = values.len()`
/// and the point is `(1 : values)`.
pub fn measure_consistency(
    values: &[Ball],
    report: &ExponentReport,
    max_degree: u32,
    max_height: u64,
    trials: usize,
    seed: u64,
) -> Result<ConsistencyReport> {
    let n = values.len();
    if n == 0 || max_degree == 0 || max_height == 0 || max_height > i64::MAX as u64 {
        return Err(Error::InvalidArgument("values must be nonempty and D, H positive".into()));
    }
    if !report.admissible || report.k + 1 != report.params.n || report.params.n as usize != n {
        return Err(Error::InvalidArgument("exponent report must be admissible with k = n − 1 = values − 1".into()));
    }
    let mut out = ConsistencyReport { seed, trials, exhaustive: false, fitted_c: None, violations: 0, scatter: Vec::new() };
    if trials == 0 {
        return Ok(out);
    }
    let monos = monomials(n, max_degree);
    let samples = match enumerate_all(&monos, max_height, trials) {
        Some(all) => {
            out.exhaustive = true;
            all
        }
        None => draw(&monos, max_height, trials, seed),
    };

    let eval_prec = values.iter().map(Ball::prec).max().unwrap_or(SHAPE_PREC).max(SHAPE_PREC);
    let prec = SHAPE_PREC;
    let mut coords = vec![Ball::one(prec)];
    coords.extend(values.iter().map(|v| v.with_prec(prec)));
    let log_norm = max_norm(&coords).ln()?;
    let mut degree_powers: Vec<Option<(Ball, Ball)>> = vec![None; max_degree as usize + 1];
    let mut needed: Vec<f64> = Vec::with_capacity(samples.len());
    for p in &samples {
        let deg = p.degree();
        let dg = Ball::from_i64(i64::from(deg), prec);
        let (inner, outer) = match &degree_powers[deg as usize] {
            Some(pair) => pair.clone(),
            None => {
                let pair = (dg.pow(&report.inner)?, dg.pow(&report.degree_exp)?);
                degree_powers[deg as usize] = Some(pair.clone());
                pair
            }
        };
        let h = Ball::exact(Dyadic::from_bigint(p.height()), prec).ln()?;
        let shape = &(&h + &inner).pow(&report.bracket)? * &outer;
        let value = p.eval(values, eval_prec);
        let (log_abs, c) = if value.contains_zero() {
            out.violations += 1;
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            let l = value.abs().with_prec(prec).ln()?;
            let c = (&(&(&dg * &log_norm) + &h) - &l).div(&shape)?;
            (l.to_f64(), c.upper().to_f64())
        };
        needed.push(c);
        out.scatter.push(ScatterPoint { degree: deg, height: p.height(), shape: shape.to_f64(), log_abs });
    }
    out.fitted_c = Some(needed.into_iter().fold(0.0, f64::max));
    out.scatter.sort_by(|a, b| a.shape.total_cmp(&b.shape).then(a.log_abs.total_cmp(&b.log_abs)));
    Ok(out)
}

/// Every nonconstant polynomial on `monos` with height `≤ h`, if there are at most `cap`.
fn enumerate_all(monos: &[Vec<u32>], h: u64, cap: usize) -> Option<Vec<IntPolynomial>> {
    let n = monos[0].len();
    let base = 2 * u128::from(h) + 1;
    let total = (0..monos.len()).try_fold(1u128, |acc, _| acc.checked_mul(base))?;
    if total > cap as u128 + base {
        return None;
    }
    let h = h as i64;
    let mut out = Vec::new();
    let mut digits = vec![-h; monos.len()];
    loop {
        let p = IntPolynomial::new(n, monos.iter().cloned().zip(digits.iter().map(|&c| BigInt::from(c))).collect());
        if p.degree() > 0 {
            out.push(p);
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return (out.len() <= cap).then_some(out);
            }
            if digits[i] < h {
                digits[i] += 1;
                break;
            }
            digits[i] = -h;
            i += 1;
        }
    }
}

fn draw(monos: &[Vec<u32>], h: u64, trials: usize, seed: u64) -> Vec<IntPolynomial> {
    let n = monos[0].len();
    let h = h as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    while out.len() < trials {
        let terms = monos.iter().map(|e| (e.clone(), BigInt::from(rng.gen_range(-h..=h)))).collect();
        let p = IntPolynomial::new(n, terms);
        if p.degree() > 0 {
            out.push(p);
        }
    }
    out
}
