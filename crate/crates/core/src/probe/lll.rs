//! Integral LLL reduction (all Gram–Schmidt data kept as exact integers).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// Lovász parameter `δ = NUM/DEN = 0.99`.
const DELTA_NUM: u32 = 99;
const DELTA_DEN: u32 = 100;

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nearest integer to `a / b` for `b > 0`, ties away from zero.
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    let (q, r) = a.div_mod_floor(b);
    if &r * &two >= *b {
        q + 1
    } else {
        q
    }
}

/// Reduces the rows of `basis` with parameter `0.99`.
///
/// Works with the integers `d_i` (Gram determinants) and
/// `λ_{ij} = d_j μ_{ij}`, so every division is exact. Fails on linearly
/// dependent rows.
pub fn lll_reduce(basis: &[Vec<BigInt>]) -> Result<Vec<Vec<BigInt>>> {
    let m = basis.len();
    let mut b: Vec<Vec<BigInt>> = basis.to_vec();
    if m == 0 {
        return Ok(b);
    }
    // 1-based: d[0] = 1, d[i] for row i−1; lam[i][j] for rows i−1, j−1.
    let mut d: Vec<BigInt> = vec![BigInt::zero(); m + 1];
    let mut lam: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); m + 1]; m + 1];
    d[0] = BigInt::from(1);
    d[1] = dot(&b[0], &b[0]);
    if d[1].is_zero() {
        return Err(Error::DependentRows);
    }
    let mut k = 2;
    let mut kmax = 1;
    while k <= m {
        if k > kmax {
            kmax = k;
            for j in 1..=k {
                let mut u = dot(&b[k - 1], &b[j - 1]);
                for i in 1..j {
                    u = (&d[i] * &u - &lam[k][i] * &lam[j][i]) / &d[i - 1];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    if u.is_zero() {
                        return Err(Error::DependentRows);
                    }
                    d[k] = u;
                }
            }
        }
        loop {
            reduce(&mut b, &mut lam, &d, k, k - 1);
            let l = &lam[k][k - 1];
            let lhs = (&d[k] * &d[k - 2] + l * l) * DELTA_DEN;
            let rhs = &d[k - 1] * &d[k - 1] * DELTA_NUM;
            if lhs < rhs {
                swap(&mut b, &mut lam, &mut d, k, kmax);
                k = (k - 1).max(2);
            } else {
                for l in (1..=k - 2).rev() {
                    reduce(&mut b, &mut lam, &d, k, l);
                }
                k += 1;
                break;
            }
        }
    }
    Ok(b)
}

fn reduce(b: &mut [Vec<BigInt>], lam: &mut [Vec<BigInt>], d: &[BigInt], k: usize, l: usize) {
    let twice: BigInt = &lam[k][l] * 2;
    if twice.abs() <= d[l] {
        return;
    }
    let q = round_div(&lam[k][l], &d[l]);
    let (head, tail) = b.split_at_mut(k - 1);
    for (x, y) in tail[0].iter_mut().zip(&head[l - 1]) {
        *x -= &q * y;
    }
    lam[k][l] -= &q * &d[l];
    for i in 1..l {
        let t = &q * &lam[l][i];
        lam[k][i] -= t;
    }
}

fn swap(b: &mut [Vec<BigInt>], lam: &mut [Vec<BigInt>], d: &mut [BigInt], k: usize, kmax: usize) {
    b.swap(k - 1, k - 2);
    for j in 1..k - 1 {
        let t = std::mem::take(&mut lam[k][j]);
        lam[k][j] = std::mem::replace(&mut lam[k - 1][j], t);
    }
    let l = lam[k][k - 1].clone();
    let big = (&d[k - 2] * &d[k] + &l * &l) / &d[k - 1];
    for i in k + 1..=kmax {
        let t = lam[i][k].clone();
        lam[i][k] = (&d[k] * &lam[i][k - 1] - &l * &t) / &d[k - 1];
        lam[i][k - 1] = (&big * &t + &l * &lam[i][k]) / &d[k];
    }
    d[k - 1] = big;
}
